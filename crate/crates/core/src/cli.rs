//! Command-line front end. Every command builds a serializable report;
//! `--json` prints it verbatim, otherwise a short text summary is shown.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::s;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bnn::{
    bitlength_sweep, cycle_estimate, evaluate, quantize_params, validate_config, EvalOptions, Model, NetworkTopology,
    PEConfig, Posterior, QuantPlan, QuantizedParams, Status, VariationalParams,
};
use crate::data::Dataset;
use crate::fxp::FixedSpec;
use crate::grng::{GaussianSource, GrngConfig, GrngKind};
use crate::io::{
    load_mnist, read_csv_labeled, read_params, read_quant, split_train_test, write_params, write_quant, CsvSchema,
    Normalizer,
};
use crate::rlf::RlfGrng;
use crate::stats::{binomial_gof, pass_rate, runs_test, stability};
use crate::train::{train_bbb, train_fnn_dropout, TrainConfig};
use crate::wallace::{RingMode, WallaceNss, WallaceRing};

pub const EXIT_OK: i32 = 0;
pub const EXIT_WARNING: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vibnn", version, about = "Gaussian generators and variational BNN inference on a simulated accelerator")]
pub struct Cli {
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Print the full report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit samples from a Gaussian generator.
    Gen(GenArgs),
    /// Stability, runs-test pass rate and binomial fit of a generator.
    Stats(StatsArgs),
    /// Train a BNN (or an FNN with dropout).
    Train(TrainArgs),
    /// Quantize a parameter file.
    Quantize(QuantizeArgs),
    /// Monte Carlo inference over a test set.
    Infer(InferArgs),
    /// Check PE sizing constraints and estimate cycles per image.
    ValidateConfig(ValidateArgs),
    /// Accuracy per fixed-point bit-length.
    SweepBitlength(SweepArgs),
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// BNN vs FNN+dropout accuracy on shrinking training sets.
    SmallData(SmallDataArgs),
}

#[derive(Debug, Args, Clone)]
pub struct GrngArgs {
    /// rlf, wallace, software, nss or reference.
    #[arg(long = "variant", alias = "grng", default_value = "rlf")]
    pub variant: GrngKind,
    #[arg(long)]
    pub lanes: Option<usize>,
    #[arg(long)]
    pub units: Option<usize>,
    #[arg(long)]
    pub pool: Option<usize>,
    #[arg(long)]
    pub loops: Option<usize>,
    /// Fixed-point pool datapath for wallace/nss, e.g. s8.5; "none" for real.
    #[arg(long)]
    pub fixed: Option<String>,
}

impl GrngArgs {
    fn config(&self) -> Result<GrngConfig, String> {
        let mut c = GrngConfig::new(self.variant);
        if let Some(v) = self.lanes {
            c.lanes = v;
        }
        if let Some(v) = self.units {
            c.units = v;
        }
        if let Some(v) = self.pool {
            c.pool = v;
        }
        if let Some(v) = self.loops {
            c.loops = v;
        }
        match self.fixed.as_deref() {
            None => {}
            Some("none") => c.fixed = None,
            Some(s) => c.fixed = Some(s.parse::<FixedSpec>().map_err(|e| e.to_string())?),
        }
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub grng: GrngArgs,
    #[arg(long, default_value_t = 16)]
    pub count: usize,
    /// Emit raw popcounts instead of standardized values (rlf only).
    #[arg(long)]
    pub raw_sums: bool,
    /// Include the generator's internal state after generation.
    #[arg(long)]
    pub dump_state: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub grng: GrngArgs,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// MNIST directory (IDX files) or a CSV file.
    #[arg(long)]
    pub dataset: PathBuf,
    /// CSV has a header row.
    #[arg(long)]
    pub csv_header: bool,
    /// CSV label column (default: last).
    #[arg(long)]
    pub label_column: Option<usize>,
    /// Held-out share of a CSV dataset.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Use only the first N test examples.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "784,200,200,10")]
    pub topology: NetworkTopology,
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file overriding the bundled defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub prior_std: Option<f64>,
    #[arg(long)]
    pub kl_weight: Option<f64>,
    /// Train the point-estimate FNN baseline instead.
    #[arg(long)]
    pub fnn: bool,
    #[arg(long)]
    pub dropout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Word size for calibrated per-tensor formats.
    #[arg(long, conflicts_with = "spec")]
    pub bits: Option<u8>,
    /// One format for everything, e.g. s8.5.
    #[arg(long)]
    pub spec: Option<String>,
    /// Dataset whose first 1000 training inputs calibrate activation ranges.
    #[arg(long)]
    pub calibrate: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// VIBP or VIBQ file.
    #[arg(long)]
    pub params: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 8)]
    pub mc: usize,
    #[command(flatten)]
    pub grng: GrngArgs,
    /// Quantize float parameters to this many bits before inference.
    #[arg(long)]
    pub quant: Option<u8>,
    /// Images sharing one weight draw (1 = resample per image).
    #[arg(long, default_value_t = 1)]
    pub share: usize,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long = "T", default_value_t = 16)]
    pub t: usize,
    #[arg(long = "S", default_value_t = 8)]
    pub s: usize,
    #[arg(long = "N", default_value_t = 8)]
    pub n: usize,
    #[arg(long = "B", default_value_t = 8)]
    pub b: usize,
    #[arg(long, default_value_t = 512)]
    pub maxws: usize,
    #[arg(long, default_value = "784,200,200,10")]
    pub topology: NetworkTopology,
    #[arg(long, default_value_t = 200e6)]
    pub clock_hz: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "4,6,8,10,12,16")]
    pub bits: Vec<u8>,
    #[arg(long, default_value_t = 8)]
    pub mc: usize,
    #[command(flatten)]
    pub grng: GrngArgs,
    #[arg(long, default_value_t = 0.975)]
    pub threshold: f64,
    #[arg(long, default_value_t = 100)]
    pub share: usize,
}

#[derive(Debug, Args)]
pub struct SmallDataArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "784,200,200,10")]
    pub topology: NetworkTopology,
    /// Training-set fractions as `1/256` or decimals.
    #[arg(long, value_delimiter = ',', default_value = "1/256")]
    pub fractions: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 8)]
    pub mc: usize,
    #[arg(long, default_value_t = 100)]
    pub share: usize,
}

/// Report plus the exit code it implies.
struct Outcome {
    report: Value,
    text: String,
    code: i32,
}

impl Outcome {
    fn ok(report: impl Serialize, text: String) -> Result<Self, String> {
        Ok(Outcome {
            report: serde_json::to_value(report).map_err(|e| e.to_string())?,
            text,
            code: EXIT_OK,
        })
    }
}

/// Parses `args` (program name first), runs the command and writes the
/// report to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(o) => {
            let written = if cli.json {
                serde_json::to_string_pretty(&o.report)
                    .map_err(|e| e.to_string())
                    .and_then(|s| writeln!(out, "{s}").map_err(|e| e.to_string()))
            } else {
                write!(out, "{}", o.text).map_err(|e| e.to_string())
            };
            match written {
                Ok(()) => o.code,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_ERROR
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome, String> {
    match &cli.command {
        Command::Gen(a) => gen(a, cli.seed),
        Command::Stats(a) => stats(a, cli.seed),
        Command::Train(a) => train(a, cli.seed),
        Command::Quantize(a) => quantize(a, cli.seed),
        Command::Infer(a) => infer(a, cli.seed),
        Command::ValidateConfig(a) => validate(a),
        Command::SweepBitlength(a) => sweep(a, cli.seed),
        Command::Experiment(Experiment::SmallData(a)) => small_data(a, cli.seed),
    }
}

fn gen(a: &GenArgs, seed: u64) -> Result<Outcome, String> {
    let cfg = a.grng.config()?;
    let mut report = json!({ "command": "gen", "seed": seed, "grng": cfg, "count": a.count, "raw_sums": a.raw_sums });
    let mut text = String::new();
    if a.raw_sums {
        if cfg.kind != GrngKind::Rlf {
            return Err("--raw-sums is only available for the rlf variant".into());
        }
        let mut g = RlfGrng::with_lanes(seed, cfg.lanes).map_err(|e| e.to_string())?;
        let sums: Vec<u32> = (0..a.count).map(|_| g.next_sum()).collect();
        for v in &sums {
            text.push_str(&format!("{v}\n"));
        }
        report["samples"] = json!(sums);
        if a.dump_state {
            report["state"] = json!(g.array().engine().dump_state());
        }
    } else {
        let (samples, state) = match cfg.kind {
            GrngKind::Rlf => {
                let mut g = RlfGrng::with_lanes(seed, cfg.lanes).map_err(|e| e.to_string())?;
                let v: Vec<f64> = (0..a.count).map(|_| g.next_standard()).collect();
                (v, json!(g.array().engine().dump_state()))
            }
            GrngKind::Wallace => {
                let mode = cfg.fixed.map_or(RingMode::Real, RingMode::Fixed);
                let mut g = WallaceRing::new(cfg.units, cfg.pool, seed, mode).map_err(|e| e.to_string())?;
                let v: Vec<f64> = (0..a.count).map(|_| g.next_value()).collect();
                let state = json!({ "cycle": g.cycle(), "scramble": g.scramble(), "saturations": g.saturations(), "pool": g.values() });
                (v, state)
            }
            GrngKind::Nss => {
                let mode = cfg.fixed.map_or(RingMode::Real, RingMode::Fixed);
                let mut g = WallaceNss::with_mode(cfg.pool, seed, mode).map_err(|e| e.to_string())?;
                let v: Vec<f64> = (0..a.count).map(|_| g.next_value()).collect();
                (v, json!({ "pool": g.values() }))
            }
            _ => {
                let mut g = cfg.build(seed)?;
                let v: Vec<f64> = (0..a.count).map(|_| g.next_gaussian()).collect();
                (v, Value::Null)
            }
        };
        for v in &samples {
            text.push_str(&format!("{v}\n"));
        }
        report["samples"] = json!(samples);
        if a.dump_state {
            if state.is_null() {
                return Err(format!("--dump-state is not available for the {} variant", cfg.kind));
            }
            if let Some(s) = state.as_str() {
                text.push_str(s);
            } else {
                text.push_str(&format!("{state}\n"));
            }
            report["state"] = state;
        }
    }
    Ok(Outcome {
        report,
        text,
        code: EXIT_OK,
    })
}

fn stats(a: &StatsArgs, seed: u64) -> Result<Outcome, String> {
    let cfg = a.grng.config()?;
    let mut g = cfg.build(seed)?;
    let samples: Vec<f64> = (0..a.samples).map(|_| g.next_gaussian()).collect();
    let stab = stability(&samples).map_err(|e| e.to_string())?;
    let runs = runs_test(&samples, a.alpha).map_err(|e| e.to_string())?;
    let rate = pass_rate(
        |s| cfg.build(s).expect("config already built once"),
        a.trials,
        a.samples,
        a.alpha,
        seed,
    )
    .map_err(|e| e.to_string())?;
    let gof = if cfg.kind == GrngKind::Rlf {
        let mut r = RlfGrng::with_lanes(seed, cfg.lanes).map_err(|e| e.to_string())?;
        let sums: Vec<u32> = (0..a.samples).map(|_| r.next_sum()).collect();
        Some(binomial_gof(&sums, 255, 0.5).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let mut text = format!(
        "{}: mu error {:.4}, sigma error {:.4} over {} samples\nruns test z {:.3} ({})\npass rate {:.3} ({}/{} trials, alpha {})\n",
        cfg.kind,
        stab.mu_error,
        stab.sigma_error,
        stab.sample_count,
        runs.z_stat,
        if runs.passed { "pass" } else { "fail" },
        rate.rate,
        rate.passed,
        rate.trials,
        a.alpha
    );
    if let Some(g) = &gof {
        text.push_str(&format!("binomial fit chi2 {:.2} (dof {}), p {:.4}\n", g.chi2, g.dof, g.p_value));
    }
    Outcome::ok(
        json!({ "command": "stats", "seed": seed, "grng": cfg, "stability": stab, "runs_test": runs, "pass_rate": rate, "binomial_gof": gof }),
        text,
    )
}

/// Training and test splits plus a description of how they were made.
fn load_data(a: &DataArgs, seed: u64) -> Result<(Dataset, Dataset, Value), String> {
    let (train, mut test, meta) = if a.dataset.is_dir() {
        let (train, test) = load_mnist(&a.dataset).map_err(|e| e.to_string())?;
        (train, test, json!({ "format": "mnist-idx", "path": a.dataset }))
    } else {
        let (all, names) = read_csv_labeled(&a.dataset, &csv_schema(a)?).map_err(|e| e.to_string())?;
        let (mut train, mut test, test_idx) = split_train_test(&all, a.test_fraction, seed);
        let norm = Normalizer::fit(&train.x);
        norm.apply(&mut train.x);
        norm.apply(&mut test.x);
        let meta = json!({ "format": "csv", "path": a.dataset, "labels": names, "test_fraction": a.test_fraction, "test_indices": test_idx, "normalizer": norm });
        (train, test, meta)
    };
    if let Some(n) = a.limit {
        test = test.head(n);
    }
    Ok((train, test, meta))
}

fn csv_schema(a: &DataArgs) -> Result<CsvSchema, String> {
    let first = std::fs::read_to_string(&a.dataset)
        .map_err(|e| format!("{}: {e}", a.dataset.display()))?
        .lines()
        .next()
        .map(|l| l.split(',').count())
        .unwrap_or(0);
    if first < 2 {
        return Err("CSV needs at least one feature and a label column".into());
    }
    Ok(CsvSchema {
        has_header: a.csv_header,
        label_column: a.label_column.unwrap_or(first - 1),
        feature_columns: None,
    })
}

fn train_config(a: &TrainArgs, seed: u64) -> Result<TrainConfig, String> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            toml::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => TrainConfig::default(),
    };
    cfg.seed = seed;
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.fraction {
        cfg.data_fraction = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.prior_std {
        cfg.prior_std = v;
    }
    if a.kl_weight.is_some() {
        cfg.kl_weight = a.kl_weight;
    }
    if let Some(v) = a.dropout {
        cfg.dropout = v;
    }
    Ok(cfg)
}

fn mean_accuracy(p: &VariationalParams, data: &Dataset) -> f64 {
    let correct = data
        .x
        .outer_iter()
        .zip(&data.y)
        .filter(|(x, &y)| argmax(&p.forward_mean(&x.to_vec())) == y)
        .count();
    correct as f64 / data.len().max(1) as f64
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

fn train(a: &TrainArgs, seed: u64) -> Result<Outcome, String> {
    let cfg = train_config(a, seed)?;
    let (train_set, test, data) = load_data(&a.data, seed)?;
    let (params, history) = if a.fnn {
        train_fnn_dropout(&train_set, &a.topology, &cfg)
    } else {
        train_bbb(&train_set, &a.topology, &cfg)
    }
    .map_err(|e| e.to_string())?;
    write_params(&a.out, &params).map_err(|e| e.to_string())?;
    let acc = mean_accuracy(&params, &test);
    let text = format!(
        "trained {} on {} examples for {} epochs; final loss {:.4}; test accuracy at mean weights {:.4}\nwrote {}\n",
        if a.fnn { "FNN+dropout" } else { "BNN" },
        history.examples,
        cfg.epochs,
        history.epochs.last().map_or(f64::NAN, |e| e.loss),
        acc,
        a.out.display()
    );
    Outcome::ok(
        json!({ "command": "train", "seed": seed, "model": if a.fnn { "fnn-dropout" } else { "bnn" }, "topology": a.topology, "config": cfg, "dataset": data, "history": history, "test_accuracy_mean_weights": acc, "out": a.out }),
        text,
    )
}

/// First 1000 training inputs of a dataset, for activation calibration.
fn calibration_rows(path: &Path, seed: u64) -> Result<ndarray::Array2<f64>, String> {
    let args = DataArgs {
        dataset: path.to_path_buf(),
        csv_header: false,
        label_column: None,
        test_fraction: 0.2,
        limit: None,
    };
    let (train, _, _) = load_data(&args, seed)?;
    let n = train.len().min(1000);
    Ok(train.x.slice(s![..n, ..]).to_owned())
}

fn quantize(a: &QuantizeArgs, seed: u64) -> Result<Outcome, String> {
    let params = read_params(&a.params).map_err(|e| e.to_string())?;
    let plan = match (&a.spec, a.bits) {
        (Some(s), _) => QuantPlan::Uniform(s.parse().map_err(|e: crate::fxp::FxpError| e.to_string())?),
        (None, Some(b)) => QuantPlan::Calibrated { bits: b },
        (None, None) => QuantPlan::Uniform(FixedSpec::Q8_5),
    };
    let calib = a.calibrate.as_deref().map(|p| calibration_rows(p, seed)).transpose()?;
    let (q, rep) = quantize_params(&params, plan, calib.as_ref().map(|c| c.view())).map_err(|e| e.to_string())?;
    write_quant(&a.out, &q).map_err(|e| e.to_string())?;
    let mut text = format!("eps {}; activations {}\n", rep.eps_spec, rep.activation_specs.join(" "));
    for t in &rep.tensors {
        text.push_str(&format!(
            "layer {} {:<8} {:<7} max error {:.3e} saturated {}\n",
            t.layer, t.tensor, t.spec, t.max_abs_error, t.saturated
        ));
    }
    text.push_str(&format!("wrote {}\n", a.out.display()));
    let plan_desc = match plan {
        QuantPlan::Uniform(s) => json!({ "uniform": s.to_string() }),
        QuantPlan::Calibrated { bits } => json!({ "calibrated_bits": bits }),
    };
    Outcome::ok(
        json!({ "command": "quantize", "seed": seed, "params": a.params, "plan": plan_desc, "calibration": a.calibrate, "report": rep, "out": a.out }),
        text,
    )
}

enum Loaded {
    Float(VariationalParams),
    Fixed(QuantizedParams),
}

fn load_model(path: &Path) -> Result<Loaded, String> {
    let head = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    match head.get(..4) {
        Some(b"VIBQ") => Ok(Loaded::Fixed(read_quant(path).map_err(|e| e.to_string())?)),
        _ => Ok(Loaded::Float(read_params(path).map_err(|e| e.to_string())?)),
    }
}

fn infer(a: &InferArgs, seed: u64) -> Result<Outcome, String> {
    let cfg = a.grng.config()?;
    let (train_set, test, data) = load_data(&a.data, seed)?;
    let opts = EvalOptions {
        n_samples: a.mc,
        grng: cfg,
        seed,
        share: a.share,
    };
    let (report, precision) = match (load_model(&a.params)?, a.quant) {
        (Loaded::Float(p), None) => (evaluate(Model::Float(&Posterior::new(&p)), &test, &opts), json!("float")),
        (Loaded::Float(p), Some(bits)) => {
            let n = train_set.len().min(1000);
            let (q, rep) = quantize_params(&p, QuantPlan::Calibrated { bits }, Some(train_set.x.slice(s![..n, ..])))
                .map_err(|e| e.to_string())?;
            (evaluate(Model::Fixed(&q), &test, &opts), json!({ "calibrated_bits": bits, "quantization": rep }))
        }
        (Loaded::Fixed(q), _) => (evaluate(Model::Fixed(&q), &test, &opts), json!("file")),
    };
    let report = report.map_err(|e| e.to_string())?;
    let text = format!(
        "accuracy {:.4} ({}/{}) with {} MC samples from {}\n",
        report.accuracy, report.correct, report.total, report.n_samples, report.grng
    );
    Outcome::ok(
        json!({ "command": "infer", "seed": seed, "params": a.params, "options": opts, "precision": precision, "dataset": data, "result": report }),
        text,
    )
}

fn validate(a: &ValidateArgs) -> Result<Outcome, String> {
    let cfg = PEConfig {
        t: a.t,
        s: a.s,
        n: a.n,
        b: a.b,
        max_ws: a.maxws,
    };
    let report = validate_config(&cfg, &a.topology).map_err(|e| e.to_string())?;
    let cycles = cycle_estimate(&cfg, &a.topology, a.clock_hz).map_err(|e| e.to_string())?;
    let mut text = format!("MinIn {}, M {}\n", report.min_in, report.m);
    for c in &report.checks {
        let status = match c.status {
            Status::Pass => "pass",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        };
        text.push_str(&format!("{} {:<22} {} vs {}: {}\n", c.id, c.constraint, c.lhs, c.rhs, status));
    }
    text.push_str(&format!(
        "{} cycles per image ({:?} + fill {}); {:.1} images/s at {} Hz\n",
        cycles.cycles_per_image, cycles.per_layer, cycles.fill, cycles.images_per_second, cycles.clock_hz
    ));
    let code = if report.failures > 0 {
        EXIT_ERROR
    } else if report.warnings > 0 {
        EXIT_WARNING
    } else {
        EXIT_OK
    };
    Ok(Outcome {
        report: json!({ "command": "validate-config", "validation": report, "cycles": cycles }),
        text,
        code,
    })
}

fn sweep(a: &SweepArgs, seed: u64) -> Result<Outcome, String> {
    let params = read_params(&a.params).map_err(|e| e.to_string())?;
    let (train_set, test, data) = load_data(&a.data, seed)?;
    let opts = EvalOptions {
        n_samples: a.mc,
        grng: a.grng.config()?,
        seed,
        share: a.share,
    };
    let n = train_set.len().min(1000);
    let report = bitlength_sweep(&params, &test, Some(train_set.x.slice(s![..n, ..])), &a.bits, &opts, a.threshold)
        .map_err(|e| e.to_string())?;
    let mut text = format!("float accuracy {:.4}\n", report.float_accuracy);
    for p in &report.points {
        text.push_str(&format!("{:>2} bits: accuracy {:.4} (delta {:+.4})\n", p.bits, p.accuracy, p.delta));
    }
    text.push_str(&match report.smallest_meeting_threshold {
        Some(b) => format!("smallest bit-length reaching {}: {b}\n", report.threshold),
        None => format!("no bit-length reaches {}\n", report.threshold),
    });
    Outcome::ok(
        json!({ "command": "sweep-bitlength", "seed": seed, "params": a.params, "options": opts, "dataset": data, "calibration_rows": n, "sweep": report }),
        text,
    )
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad fraction '{s}'"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad fraction '{s}'"))?;
            a / b
        }
        None => s.trim().parse().map_err(|_| format!("bad fraction '{s}'"))?,
    };
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("fraction '{s}' outside (0, 1]"))
    }
}

#[derive(Debug, Serialize)]
struct SmallDataRow {
    fraction: f64,
    examples: usize,
    kl_weight: f64,
    bnn_accuracy: f64,
    fnn_accuracy: f64,
}

/// Trains both models per fraction with the same topology, epochs and
/// optimizer. The BNN's KL weight is scaled by the fraction so the prior
/// carries the same weight per training example as on the full set.
#[allow(clippy::too_many_arguments)]
pub fn small_data_rows(
    train_set: &Dataset,
    test: &Dataset,
    topo: &NetworkTopology,
    fractions: &[f64],
    epochs: usize,
    mc: usize,
    share: usize,
    seed: u64,
) -> Result<Vec<Value>, String> {
    let mut rows = Vec::new();
    for &f in fractions {
        let base = TrainConfig {
            epochs,
            data_fraction: f,
            lr_decay: 1.0,
            seed,
            ..TrainConfig::default()
        };
        let examples = (f * train_set.len() as f64).round() as usize;
        let batches = examples.max(1).div_ceil(base.batch_size);
        let kl_weight = f / batches as f64;
        let bnn_cfg = TrainConfig {
            kl_weight: Some(kl_weight),
            ..base.clone()
        };
        let (bnn, h) = train_bbb(train_set, topo, &bnn_cfg).map_err(|e| e.to_string())?;
        let (fnn, _) = train_fnn_dropout(train_set, topo, &base).map_err(|e| e.to_string())?;
        let opts = EvalOptions {
            n_samples: mc,
            grng: GrngConfig::new(GrngKind::Reference),
            seed,
            share,
        };
        let b = evaluate(Model::Float(&Posterior::new(&bnn)), test, &opts).map_err(|e| e.to_string())?;
        let n = evaluate(Model::Float(&Posterior::new(&fnn)), test, &opts).map_err(|e| e.to_string())?;
        rows.push(serde_json::to_value(SmallDataRow {
            fraction: f,
            examples: h.examples,
            kl_weight,
            bnn_accuracy: b.accuracy,
            fnn_accuracy: n.accuracy,
        })
        .map_err(|e| e.to_string())?);
    }
    Ok(rows)
}

fn small_data(a: &SmallDataArgs, seed: u64) -> Result<Outcome, String> {
    let fractions = a.fractions.iter().map(|f| parse_fraction(f)).collect::<Result<Vec<_>, _>>()?;
    let (train_set, test, data) = load_data(&a.data, seed)?;
    let rows = small_data_rows(&train_set, &test, &a.topology, &fractions, a.epochs, a.mc, a.share, seed)?;
    let mut text = String::from("fraction  examples  bnn     fnn+dropout\n");
    for r in &rows {
        text.push_str(&format!(
            "{:<9.5} {:<9} {:.4}  {:.4}\n",
            r["fraction"].as_f64().unwrap_or(0.0),
            r["examples"],
            r["bnn_accuracy"].as_f64().unwrap_or(0.0),
            r["fnn_accuracy"].as_f64().unwrap_or(0.0)
        ));
    }
    Outcome::ok(
        json!({ "command": "experiment small-data", "seed": seed, "topology": a.topology, "epochs": a.epochs, "train_defaults": TrainConfig::default(), "mc": a.mc, "share": a.share, "dataset": data, "rows": rows }),
        text,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let code = run(std::iter::once("vibnn").chain(args.iter().copied()), &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn reference_config_warns() {
        let (code, out) = run_str(&["--json", "validate-config"]);
        assert_eq!(code, EXIT_WARNING);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["validation"]["warnings"], 1);
        assert_eq!(v["cycles"]["cycles_per_image"], 276);
    }

    #[test]
    fn bad_arguments_are_errors() {
        assert_eq!(run_str(&["gen", "--variant", "ziggurat"]).0, EXIT_ERROR);
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_ERROR);
        assert_eq!(run_str(&["gen", "--variant", "wallace", "--raw-sums"]).0, EXIT_ERROR);
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn gen_is_deterministic() {
        let a = run_str(&["--json", "--seed", "4", "gen", "--variant", "wallace", "--count", "50"]);
        let b = run_str(&["--json", "--seed", "4", "gen", "--variant", "wallace", "--count", "50"]);
        assert_eq!(a, b);
        let (code, text) = run_str(&["gen", "--raw-sums", "--count", "3"]);
        assert_eq!(code, 0);
        assert!(text.lines().all(|l| l.parse::<u32>().unwrap() <= 255));
    }

    #[test]
    fn fractions_parse() {
        assert_eq!(parse_fraction("1/256").unwrap(), 1.0 / 256.0);
        assert_eq!(parse_fraction("0.5").unwrap(), 0.5);
        assert!(parse_fraction("2").is_err());
        assert!(parse_fraction("1/0x").is_err());
    }
}
