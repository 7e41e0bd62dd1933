mod common;

use std::path::Path;
use std::process::{Command, Output};

fn vibnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vibnn")).args(args).output().unwrap()
}

fn twice(args: &[&str]) -> Output {
    let a = vibnn(args);
    let b = vibnn(args);
    assert_eq!(a.stdout, b.stdout, "{args:?} differs between runs");
    assert_eq!(a.status.code(), b.status.code());
    a
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn every_command_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("blobs.csv");
    common::write_blobs_csv(&csv, 300);
    let vibp = dir.path().join("net.vibp");
    let vibq = dir.path().join("net.vibq");
    let data = ["--dataset", s(&csv), "--csv-header"];

    let ok = |args: Vec<&str>| {
        let out = twice(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice::<serde_json::Value>(&out.stdout).unwrap()
    };

    ok(vec!["--json", "--seed", "3", "gen", "--variant", "rlf", "--count", "64"]);
    ok(vec!["--json", "gen", "--variant", "wallace", "--fixed", "s8.5", "--count", "64"]);
    ok(vec!["--json", "stats", "--variant", "nss", "--samples", "2000", "--trials", "5"]);

    let mut train = vec!["--json", "--seed", "5", "train", "--topology", "4,8,3", "--epochs", "5", "--batch-size", "16", "--out", s(&vibp)];
    train.extend(data);
    let report = ok(train);
    assert!(report["test_accuracy_mean_weights"].as_f64().unwrap() > 0.5, "{report}");

    ok(vec!["--json", "quantize", "--params", s(&vibp), "--out", s(&vibq), "--bits", "8"]);

    for params in [&vibp, &vibq] {
        let mut infer = vec!["--json", "--seed", "2", "infer", "--params", s(params), "--variant", "wallace", "--mc", "4"];
        infer.extend(data);
        let r = ok(infer);
        assert!(r["result"]["accuracy"].as_f64().unwrap() > 0.5, "{r}");
    }

    let mut sweep = vec!["--json", "sweep-bitlength", "--params", s(&vibp), "--bits", "4,8", "--mc", "2"];
    sweep.extend(data);
    ok(sweep);

    let mut small = vec!["--json", "experiment", "small-data", "--topology", "4,8,3", "--fractions", "1/4", "--epochs", "3", "--mc", "2"];
    small.extend(data);
    ok(small);

    let v = twice(&["--json", "validate-config"]);
    assert_eq!(v.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(vibnn(&["validate-config", "--S", "4"]).status.code(), Some(3));
    assert_eq!(vibnn(&["validate-config", "--T", "1", "--S", "2", "--N", "2", "--topology", "64,8"]).status.code(), Some(0));
    assert_eq!(vibnn(&["infer", "--params", "/nonexistent.vibp", "--dataset", "/nonexistent"]).status.code(), Some(3));
    assert_eq!(vibnn(&["--threads", "2", "gen", "--count", "1"]).status.code(), Some(0));
    assert_eq!(vibnn(&["bogus"]).status.code(), Some(3));
}
