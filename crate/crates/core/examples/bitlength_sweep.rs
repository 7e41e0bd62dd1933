//! Accuracy against fixed-point word size for a trained parameter file.
//!
//! cargo run --release --example bitlength_sweep -- mnist_bnn.vibp

use std::path::PathBuf;

use ndarray::s;
use vibnn::bnn::{bitlength_sweep, EvalOptions};
use vibnn::grng::{GrngConfig, GrngKind};
use vibnn::io::{load_mnist, read_params, MNIST_DIR_ENV};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "mnist_bnn.vibp".into());
    let params = read_params(path.as_ref())?;
    let dir = std::env::var(MNIST_DIR_ENV).map_or_else(|_| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"), PathBuf::from);
    let (train, test) = load_mnist(&dir)?;
    let mut opts = EvalOptions::new(GrngConfig::new(GrngKind::Rlf), 1);
    opts.share = 100;
    let r = bitlength_sweep(&params, &test, Some(train.x.slice(s![..1000, ..])), &[4, 6, 8, 10, 12, 16], &opts, 0.975)?;
    println!("float {:.4}", r.float_accuracy);
    for p in &r.points {
        println!("{:>2} bits  eps {:<6} accuracy {:.4}  delta {:+.4}", p.bits, p.eps_spec, p.accuracy, p.delta);
    }
    println!("smallest bit-length reaching {}: {:?}", r.threshold, r.smallest_meeting_threshold);
    Ok(())
}
