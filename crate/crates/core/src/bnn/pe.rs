use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{BnnError, NetworkTopology};
use crate::fxp::{rescale_i128, FixedSpec};

/// Accelerator sizing: `T` PE sets of `S` PEs, each PE taking `N` inputs
/// of `B` bits per cycle; `MaxWS` bounds the memory word in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PEConfig {
    pub t: usize,
    pub s: usize,
    pub n: usize,
    pub b: usize,
    pub max_ws: usize,
}

impl PEConfig {
    /// 16 PE sets of eight 8-input PEs with 8-bit operands.
    pub fn reference() -> Self {
        PEConfig {
            t: 16,
            s: 8,
            n: 8,
            b: 8,
            max_ws: 512,
        }
    }

    /// Total PE count `M = T * S`.
    pub fn m(&self) -> usize {
        self.t * self.s
    }

    fn check_positive(&self) -> Result<(), BnnError> {
        let fields = [("T", self.t), ("S", self.s), ("N", self.n), ("B", self.b), ("MaxWS", self.max_ws)];
        match fields.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(BnnError::Config(format!("{name} must be positive"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub constraint: &'static str,
    pub lhs: u64,
    pub rhs: u64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigReport {
    pub config: PEConfig,
    pub topology: NetworkTopology,
    pub min_in: usize,
    pub m: usize,
    pub checks: Vec<Check>,
    pub warnings: usize,
    pub failures: usize,
}

/// Evaluates the PE sizing constraints for a topology.
///
/// `pe_sets` (`T*S < ceil(MinIn/N)`) is only a warning: typical designs,
/// including the reference 16x8x8 one, violate it. `word_size` and
/// `square_pe` fail hard; `pe_total` holds by construction since `M` is
/// derived.
pub fn validate_config(cfg: &PEConfig, topo: &NetworkTopology) -> Result<ConfigReport, BnnError> {
    cfg.check_positive()?;
    let min_in = topo.min_fan_in();
    let ts = (cfg.t * cfg.s) as u64;
    let per_pe = min_in.div_ceil(cfg.n) as u64;
    let word = (cfg.b * cfg.n * cfg.s) as u64;
    let status = |ok: bool, soft: bool| match (ok, soft) {
        (true, _) => Status::Pass,
        (false, true) => Status::Warn,
        (false, false) => Status::Fail,
    };
    let checks = vec![
        Check {
            id: "pe_sets",
            constraint: "T*S < ceil(MinIn/N)",
            lhs: ts,
            rhs: per_pe,
            status: status(ts < per_pe, true),
        },
        Check {
            id: "word_size",
            constraint: "B*N*S <= MaxWS",
            lhs: word,
            rhs: cfg.max_ws as u64,
            status: status(word <= cfg.max_ws as u64, false),
        },
        Check {
            id: "square_pe",
            constraint: "S == N",
            lhs: cfg.s as u64,
            rhs: cfg.n as u64,
            status: status(cfg.s == cfg.n, false),
        },
        Check {
            id: "pe_total",
            constraint: "M == T*S",
            lhs: cfg.m() as u64,
            rhs: ts,
            status: Status::Pass,
        },
    ];
    let warnings = checks.iter().filter(|c| c.status == Status::Warn).count();
    let failures = checks.iter().filter(|c| c.status == Status::Fail).count();
    Ok(ConfigReport {
        config: *cfg,
        topology: topo.clone(),
        min_in,
        m: cfg.m(),
        checks,
        warnings,
        failures,
    })
}

/// Cycles to fill the fetch, weight-generation, MAC, accumulate and
/// activation stages once per image.
pub const PIPELINE_FILL: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleEstimate {
    pub per_layer: Vec<u64>,
    pub fill: u64,
    pub cycles_per_image: u64,
    pub clock_hz: f64,
    pub images_per_second: f64,
}

/// Model-level cycle count: `sum ceil(out/M) * ceil(in/N) + fill`.
pub fn cycle_estimate(cfg: &PEConfig, topo: &NetworkTopology, clock_hz: f64) -> Result<CycleEstimate, BnnError> {
    cfg.check_positive()?;
    let per_layer: Vec<u64> = topo
        .shapes()
        .map(|(fan_in, fan_out)| (fan_out.div_ceil(cfg.m()) * fan_in.div_ceil(cfg.n)) as u64)
        .collect();
    let cycles = per_layer.iter().sum::<u64>() + PIPELINE_FILL;
    Ok(CycleEstimate {
        per_layer,
        fill: PIPELINE_FILL,
        cycles_per_image: cycles,
        clock_hz,
        images_per_second: clock_hz / cycles as f64,
    })
}

/// Dense layer computed the way a PE does: `N` products per cycle, partial
/// sums added into an accumulator, bias once at the end.
pub fn pe_forward(
    inputs: &[f64],
    weights: &Array2<f64>,
    bias: &[f64],
    n: usize,
    relu: bool,
) -> Result<Vec<f64>, BnnError> {
    let (out, fan_in) = weights.dim();
    if inputs.len() != fan_in || bias.len() != out || n == 0 {
        return Err(BnnError::Shape(format!(
            "inputs {}, weights {:?}, bias {}, N {}",
            inputs.len(),
            weights.dim(),
            bias.len(),
            n
        )));
    }
    Ok(weights
        .outer_iter()
        .zip(bias)
        .map(|(row, &b)| {
            let row = row.as_slice().expect("row-major weights");
            let mut acc = 0.0;
            for (w, x) in row.chunks(n).zip(inputs.chunks(n)) {
                acc += w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
            let y = acc + b;
            if relu {
                y.max(0.0)
            } else {
                y
            }
        })
        .collect())
}

/// Fixed-point operands of one layer: weights are `(out, in)` row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FxLayerSpec {
    pub input: FixedSpec,
    pub weight: FixedSpec,
    pub bias: FixedSpec,
    pub output: FixedSpec,
}

/// Fixed-point PE layer. Products are accumulated at full width and the
/// result is rounded, rectified and saturated once at write-back. Returns
/// the outputs and the number of saturated neurons.
pub fn pe_forward_fx(
    inputs: &[i64],
    weights: &[i64],
    bias: &[i64],
    specs: &FxLayerSpec,
    relu: bool,
    out: &mut Vec<i64>,
) -> Result<usize, BnnError> {
    let fan_in = inputs.len();
    if fan_in == 0 || weights.len() != fan_in * bias.len() {
        return Err(BnnError::Shape(format!(
            "inputs {}, weights {}, bias {}",
            fan_in,
            weights.len(),
            bias.len()
        )));
    }
    let prod_frac = (specs.input.frac_bits() + specs.weight.frac_bits()) as u32;
    let out_frac = specs.output.frac_bits() as u32;
    let bias_frac = specs.bias.frac_bits() as u32;
    let width = specs.input.total_bits() as u32 + specs.weight.total_bits() as u32 + usize::BITS - fan_in.leading_zeros();
    out.clear();
    let mut saturated = 0;
    for (row, &b) in weights.chunks_exact(fan_in).zip(bias) {
        let acc: i128 = if width < 62 {
            row.iter().zip(inputs).map(|(w, x)| w * x).sum::<i64>() as i128
        } else {
            row.iter().zip(inputs).map(|(&w, &x)| w as i128 * x as i128).sum()
        };
        let acc = acc + rescale_i128(b as i128, bias_frac, prod_frac);
        let mut y = rescale_i128(acc, prod_frac, out_frac);
        if relu {
            y = y.max(0);
        }
        let clipped = y.clamp(specs.output.min_raw() as i128, specs.output.max_raw() as i128);
        saturated += (clipped != y) as usize;
        out.push(clipped as i64);
    }
    Ok(saturated)
}
