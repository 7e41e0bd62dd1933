//! Generic CSV ingestion with train-split normalization, then BNN and
//! FNN training on a small two-class problem.
//!
//! cargo run --release --example csv_dataset

use std::io::Write;

use rand::{Rng, SeedableRng};
use vibnn::bnn::{evaluate, EvalOptions, Model, Posterior};
use vibnn::grng::{GrngConfig, GrngKind};
use vibnn::io::{read_csv_labeled, split_train_test, CsvSchema, Normalizer};
use vibnn::train::{train_bbb, train_fnn_dropout, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::temp_dir().join("vibnn_voice.csv");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "jitter,shimmer,hnr,status")?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for i in 0..300 {
        let sick = i % 3 == 0;
        let shift = if sick { 1.0 } else { 0.0 };
        let row: Vec<f64> = (0..3).map(|k| 10.0 * k as f64 + shift * (k + 1) as f64 + rng.random_range(-1.0..1.0)).collect();
        writeln!(f, "{:.4},{:.4},{:.4},{}", row[0], row[1], row[2], if sick { "pd" } else { "healthy" })?;
    }
    drop(f);

    let (data, labels) = read_csv_labeled(&path, &CsvSchema::label_last(true, 4))?;
    let (mut train, mut test, test_idx) = split_train_test(&data, 0.25, 1);
    let norm = Normalizer::fit(&train.x);
    norm.apply(&mut train.x);
    norm.apply(&mut test.x);
    println!("labels {labels:?}; {} train / {} test (first test rows {:?})", train.len(), test.len(), &test_idx[..5]);

    let topo = "3,16,2".parse()?;
    let cfg = TrainConfig { epochs: 60, batch_size: 16, prior_std: 1.0, ..TrainConfig::default() };
    let (bnn, _) = train_bbb(&train, &topo, &cfg)?;
    let (fnn, _) = train_fnn_dropout(&train, &topo, &cfg)?;
    let opts = EvalOptions::new(GrngConfig::new(GrngKind::Wallace), 1);
    for (name, p) in [("bnn", &bnn), ("fnn+dropout", &fnn)] {
        let r = evaluate(Model::Float(&Posterior::new(p)), &test, &opts)?;
        println!("{name:<12} accuracy {:.3}, mean predictive std {:.3}", r.accuracy, r.mean_predictive_std);
    }
    Ok(())
}
