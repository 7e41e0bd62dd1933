//! BNN against FNN+dropout as the training set shrinks.
//!
//! cargo run --release --example small_data -- [fraction denominators...]

use std::path::PathBuf;

use vibnn::bnn::NetworkTopology;
use vibnn::cli::small_data_rows;
use vibnn::io::{load_mnist, MNIST_DIR_ENV};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let denoms: Vec<f64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let fractions: Vec<f64> = if denoms.is_empty() { vec![1.0 / 256.0, 1.0 / 64.0] } else { denoms.iter().map(|d| 1.0 / d).collect() };
    let dir = std::env::var(MNIST_DIR_ENV).map_or_else(|_| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"), PathBuf::from);
    let (train, test) = load_mnist(&dir)?;
    let rows = small_data_rows(&train, &test, &NetworkTopology::mnist(), &fractions, 100, 8, 100, 1)?;
    for r in rows {
        println!("{r}");
    }
    Ok(())
}
