use ndarray::ArrayView2;
use serde::Serialize;

use super::pe::FxLayerSpec;
use super::{dense, sigma_from_rho, BnnError, NetworkTopology, VariationalParams};
use crate::fxp::{round_shift_i64, FixedSpec};

/// How the fixed-point formats of a network are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantPlan {
    /// One spec for every tensor, activation and ε.
    Uniform(FixedSpec),
    /// `bits`-wide words with the binary point of each tensor placed to
    /// cover its observed range; ε uses `bits - 3` fractional bits.
    Calibrated { bits: u8 },
}

/// One quantized layer; weight tensors are `(out, in)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QLayer {
    pub rows: usize,
    pub cols: usize,
    pub specs: FxLayerSpec,
    pub w_mu: Vec<i64>,
    pub w_sigma: Vec<i64>,
    pub b_mu: Vec<i64>,
    pub b_sigma: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedParams {
    pub topology: NetworkTopology,
    /// Format of the unit Gaussian samples.
    pub eps_spec: FixedSpec,
    pub layers: Vec<QLayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorReport {
    pub layer: usize,
    pub tensor: &'static str,
    pub spec: String,
    pub max_abs_error: f64,
    pub saturated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantReport {
    pub eps_spec: String,
    pub tensors: Vec<TensorReport>,
    pub activation_specs: Vec<String>,
}

/// Fractional bits that make a `bits`-wide word just cover `max_abs`.
fn fit_frac(max_abs: f64, bits: u8, signed: bool) -> u8 {
    let int_bits = if max_abs > 0.0 { max_abs.log2().ceil() as i32 } else { 0 };
    let magnitude = bits as i32 - signed as i32;
    (magnitude - int_bits).clamp(0, bits as i32 - 1) as u8
}

fn fit_spec(max_abs: f64, bits: u8, signed: bool) -> Result<FixedSpec, BnnError> {
    Ok(FixedSpec::new(bits, fit_frac(max_abs, bits, signed), signed)?)
}

fn quantize_tensor(
    values: impl Iterator<Item = f64>,
    spec: FixedSpec,
    layer: usize,
    tensor: &'static str,
    reports: &mut Vec<TensorReport>,
) -> Vec<i64> {
    let mut max_err: f64 = 0.0;
    let mut saturated = 0;
    let raw = values
        .map(|x| {
            let (r, s) = spec.quantize_raw(x);
            saturated += s as usize;
            let clamped = x.clamp(spec.min_value(), spec.max_value());
            max_err = max_err.max((spec.raw_to_real(r) - clamped).abs());
            r
        })
        .collect();
    reports.push(TensorReport {
        layer,
        tensor,
        spec: spec.to_string(),
        max_abs_error: max_err,
        saturated,
    });
    raw
}

/// Quantizes μ and σ (σ computed from ρ in floating point first).
///
/// With [`QuantPlan::Calibrated`], activation formats come from a forward
/// pass at the mean weights over `calibration` (rows are inputs); without
/// calibration data hidden activations get 4 and logits 5 integer bits.
pub fn quantize_params(
    params: &VariationalParams,
    plan: QuantPlan,
    calibration: Option<ArrayView2<f64>>,
) -> Result<(QuantizedParams, QuantReport), BnnError> {
    let depth = params.layers.len();
    let (eps_spec, act_specs, input_spec): (FixedSpec, Vec<FixedSpec>, FixedSpec) = match plan {
        QuantPlan::Uniform(spec) => (spec, vec![spec; depth], spec),
        QuantPlan::Calibrated { bits } => {
            let eps = FixedSpec::signed(bits, bits.saturating_sub(3))?;
            let mut maxima = vec![0.0f64; depth];
            let mut in_max = 1.0f64;
            match calibration {
                Some(x) => {
                    in_max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    for row in x.outer_iter() {
                        let mut a = row.to_vec();
                        for (l, layer) in params.layers.iter().enumerate() {
                            a = dense(&layer.w_mu, layer.b_mu.as_slice().expect("contiguous"), &a, l + 1 < depth);
                            maxima[l] = a.iter().fold(maxima[l], |m, v| m.max(v.abs()));
                        }
                    }
                }
                None => {
                    for (l, m) in maxima.iter_mut().enumerate() {
                        *m = if l + 1 < depth { 15.0 } else { 31.0 };
                    }
                }
            }
            let acts = maxima
                .iter()
                .enumerate()
                .map(|(l, &m)| fit_spec(m, bits, l + 1 == depth))
                .collect::<Result<Vec<_>, _>>()?;
            let input = fit_spec(in_max, bits, calibration.is_some_and(|x| x.iter().any(|&v| v < 0.0)))?;
            (eps, acts, input)
        }
    };

    let mut reports = Vec::new();
    let mut layers = Vec::with_capacity(depth);
    for (l, layer) in params.layers.iter().enumerate() {
        let w_sigma: Vec<f64> = layer.w_rho.iter().map(|&r| sigma_from_rho(r)).collect();
        let b_sigma: Vec<f64> = layer.b_rho.iter().map(|&r| sigma_from_rho(r)).collect();
        let (w_spec, b_spec) = match plan {
            QuantPlan::Uniform(spec) => (spec, spec),
            QuantPlan::Calibrated { bits } => {
                let range = |mu: &mut dyn Iterator<Item = &f64>, sig: &[f64]| {
                    mu.zip(sig).fold(0.0f64, |m, (a, s)| m.max(a.abs() + 3.0 * s))
                };
                (
                    fit_spec(range(&mut layer.w_mu.iter(), &w_sigma), bits, true)?,
                    fit_spec(range(&mut layer.b_mu.iter(), &b_sigma), bits, true)?,
                )
            }
        };
        let specs = FxLayerSpec {
            input: if l == 0 { input_spec } else { act_specs[l - 1] },
            weight: w_spec,
            bias: b_spec,
            output: act_specs[l],
        };
        layers.push(QLayer {
            rows: layer.fan_out(),
            cols: layer.fan_in(),
            specs,
            w_mu: quantize_tensor(layer.w_mu.iter().copied(), w_spec, l, "w_mu", &mut reports),
            w_sigma: quantize_tensor(w_sigma.into_iter(), w_spec, l, "w_sigma", &mut reports),
            b_mu: quantize_tensor(layer.b_mu.iter().copied(), b_spec, l, "b_mu", &mut reports),
            b_sigma: quantize_tensor(b_sigma.into_iter(), b_spec, l, "b_sigma", &mut reports),
        });
    }
    let report = QuantReport {
        eps_spec: eps_spec.to_string(),
        tensors: reports,
        activation_specs: std::iter::once(input_spec)
            .chain(act_specs.iter().copied())
            .map(|s| s.to_string())
            .collect(),
    };
    Ok((
        QuantizedParams {
            topology: params.topology().clone(),
            eps_spec,
            layers,
        },
        report,
    ))
}

/// Fixed-point weight update `w = sat(μ + round(ε σ))`; `μ`, `σ` and the
/// result share `w_spec`. Returns the number of saturated weights.
pub fn sample_weights_fx(
    mu: &[i64],
    sigma: &[i64],
    eps: &[i64],
    w_spec: FixedSpec,
    eps_spec: FixedSpec,
    out: &mut [i64],
) -> usize {
    let shift = eps_spec.frac_bits() as u32;
    let (lo, hi) = (w_spec.min_raw(), w_spec.max_raw());
    let mut saturated = 0;
    for (((o, &m), &s), &e) in out.iter_mut().zip(mu).zip(sigma).zip(eps) {
        let w = m + round_shift_i64(e * s, shift);
        let c = w.clamp(lo, hi);
        saturated += (c != w) as usize;
        *o = c;
    }
    saturated
}
