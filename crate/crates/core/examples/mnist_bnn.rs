//! Train the 784-200-200-10 BNN on MNIST, then run float and 8-bit MC
//! inference with both hardware generators.
//!
//! MNIST_DIR=path/to/idx cargo run --release --example mnist_bnn -- [epochs] [out.vibp]

use std::path::PathBuf;

use ndarray::s;
use vibnn::bnn::{evaluate, quantize_params, EvalOptions, Model, NetworkTopology, Posterior, QuantPlan};
use vibnn::grng::{GrngConfig, GrngKind};
use vibnn::io::{load_mnist, write_params, MNIST_DIR_ENV};
use vibnn::train::{train_bbb, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map_or(Ok(30), |s| s.parse())?;
    let out = PathBuf::from(args.next().unwrap_or_else(|| "mnist_bnn.vibp".into()));
    let dir = std::env::var(MNIST_DIR_ENV).map_or_else(|_| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"), PathBuf::from);
    let (train, test) = load_mnist(&dir)?;

    let cfg = TrainConfig { epochs, ..TrainConfig::default() };
    let (params, history) = train_bbb(&train, &NetworkTopology::mnist(), &cfg)?;
    write_params(&out, &params)?;
    println!("trained {} epochs, kl weight {:.2e}; wrote {}", epochs, history.kl_weight, out.display());

    let mut opts = EvalOptions::new(GrngConfig::new(GrngKind::Reference), 1);
    opts.share = 100;
    let float = evaluate(Model::Float(&Posterior::new(&params)), &test, &opts)?;
    println!("float MC accuracy {:.4}", float.accuracy);

    let (q, rep) = quantize_params(&params, QuantPlan::Calibrated { bits: 8 }, Some(train.x.slice(s![..1000, ..])))?;
    println!("8-bit activations {:?}, eps {}", rep.activation_specs, rep.eps_spec);
    for kind in [GrngKind::Rlf, GrngKind::Wallace] {
        opts.grng = GrngConfig::new(kind);
        let r = evaluate(Model::Fixed(&q), &test, &opts)?;
        println!("8-bit {kind}: accuracy {:.4} (delta {:+.4})", r.accuracy, r.accuracy - float.accuracy);
    }
    Ok(())
}
