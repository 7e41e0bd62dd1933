use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use super::pe::pe_forward_fx;
use super::quant::{quantize_params, sample_weights_fx, QuantPlan, QuantizedParams};
use super::{BnnError, VariationalParams};
use crate::data::Dataset;
use crate::fxp::FixedSpec;
use crate::grng::{derive_seed, GaussianSource, GrngConfig};

/// μ and σ of every layer, with σ evaluated once.
#[derive(Debug, Clone)]
pub struct Posterior {
    layers: Vec<PostLayer>,
}

#[derive(Debug, Clone)]
struct PostLayer {
    w_mu: Array2<f64>,
    w_sigma: Array2<f64>,
    b_mu: Array1<f64>,
    b_sigma: Array1<f64>,
}

impl Posterior {
    pub fn new(params: &VariationalParams) -> Self {
        Posterior {
            layers: params
                .layers
                .iter()
                .map(|l| PostLayer {
                    w_mu: l.w_mu.clone(),
                    w_sigma: l.w_sigma(),
                    b_mu: l.b_mu.clone(),
                    b_sigma: l.b_sigma(),
                })
                .collect(),
        }
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].w_mu.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().expect("at least one layer").w_mu.nrows()
    }

    /// One weight set `μ + σ ε`. ε is drawn for every weight in row-major
    /// order, then for every bias, layer by layer.
    fn sample<G: GaussianSource + ?Sized>(&self, grng: &mut G) -> Vec<(Array2<f64>, Array1<f64>)> {
        self.layers
            .iter()
            .map(|l| {
                let mut w = l.w_mu.clone();
                for (w, &s) in w.iter_mut().zip(&l.w_sigma) {
                    *w += s * grng.next_gaussian();
                }
                let mut b = l.b_mu.clone();
                for (b, &s) in b.iter_mut().zip(&l.b_sigma) {
                    *b += s * grng.next_gaussian();
                }
                (w, b)
            })
            .collect()
    }
}

impl From<&VariationalParams> for Posterior {
    fn from(p: &VariationalParams) -> Self {
        Posterior::new(p)
    }
}

/// Logits of a batch (rows are inputs) under one weight set.
fn forward_batch(weights: &[(Array2<f64>, Array1<f64>)], x: ArrayView2<f64>) -> Array2<f64> {
    let last = weights.len() - 1;
    let mut a = x.to_owned();
    for (l, (w, b)) in weights.iter().enumerate() {
        a = a.dot(&w.t()) + b;
        if l < last {
            a.mapv_inplace(|v| v.max(0.0));
        }
    }
    a
}

/// Reusable integer buffers for fixed-point sampling.
struct FxScratch {
    weights: Vec<(Vec<i64>, Vec<i64>)>,
    eps: Vec<i64>,
    act: Vec<i64>,
    next: Vec<i64>,
}

impl FxScratch {
    fn new(q: &QuantizedParams) -> Self {
        FxScratch {
            weights: q
                .layers
                .iter()
                .map(|l| (vec![0; l.w_mu.len()], vec![0; l.b_mu.len()]))
                .collect(),
            eps: Vec::new(),
            act: Vec::new(),
            next: Vec::new(),
        }
    }

    fn sample<G: GaussianSource + ?Sized>(&mut self, q: &QuantizedParams, grng: &mut G) -> usize {
        let mut saturated = 0;
        for (l, (w, b)) in q.layers.iter().zip(&mut self.weights) {
            self.eps.clear();
            self.eps.extend((0..l.w_mu.len()).map(|_| grng.next_fx(q.eps_spec).raw()));
            saturated += sample_weights_fx(&l.w_mu, &l.w_sigma, &self.eps, l.specs.weight, q.eps_spec, w);
            self.eps.clear();
            self.eps.extend((0..l.b_mu.len()).map(|_| grng.next_fx(q.eps_spec).raw()));
            saturated += sample_weights_fx(&l.b_mu, &l.b_sigma, &self.eps, l.specs.bias, q.eps_spec, b);
        }
        saturated
    }

    /// Dequantized logits of one input under the current weight set.
    fn forward(&mut self, q: &QuantizedParams, x: &[f64]) -> Result<Vec<f64>, BnnError> {
        let in_spec = q.layers[0].specs.input;
        self.act.clear();
        self.act.extend(x.iter().map(|&v| in_spec.quantize_raw(v).0));
        let last = q.layers.len() - 1;
        for (l, (layer, (w, b))) in q.layers.iter().zip(&self.weights).enumerate() {
            pe_forward_fx(&self.act, w, b, &layer.specs, l < last, &mut self.next)?;
            std::mem::swap(&mut self.act, &mut self.next);
        }
        let out: FixedSpec = q.layers[last].specs.output;
        Ok(self.act.iter().map(|&r| out.raw_to_real(r)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    /// One row of logits per Monte Carlo sample.
    pub mc_outputs: Array2<f64>,
    pub mean_output: Vec<f64>,
    pub predicted: usize,
    /// Sample standard deviation of every logit across the MC samples.
    pub predictive_std: Vec<f64>,
}

impl InferenceResult {
    fn from_outputs(mc_outputs: Array2<f64>) -> Self {
        let n = mc_outputs.nrows() as f64;
        let mean_output: Vec<f64> = mc_outputs.sum_axis(Axis(0)).iter().map(|s| s / n).collect();
        let predictive_std = mc_outputs
            .columns()
            .into_iter()
            .zip(&mean_output)
            .map(|(col, &m)| {
                if n < 2.0 {
                    0.0
                } else {
                    (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()
                }
            })
            .collect();
        InferenceResult {
            predicted: argmax(&mean_output),
            mean_output,
            predictive_std,
            mc_outputs,
        }
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

/// Monte Carlo estimate of the network output for `x0`: every sample draws
/// a fresh ε for every weight and bias.
pub fn mc_inference<G: GaussianSource + ?Sized>(
    x0: &[f64],
    posterior: &Posterior,
    n_samples: usize,
    grng: &mut G,
) -> Result<InferenceResult, BnnError> {
    if n_samples == 0 {
        return Err(BnnError::NoSamples);
    }
    if x0.len() != posterior.inputs() {
        return Err(BnnError::Shape(format!("input has {} features, network expects {}", x0.len(), posterior.inputs())));
    }
    let x = ArrayView2::from_shape((1, x0.len()), x0).expect("one row");
    let mut outputs = Array2::zeros((n_samples, posterior.outputs()));
    for mut row in outputs.outer_iter_mut() {
        let w = posterior.sample(grng);
        row.assign(&forward_batch(&w, x).row(0));
    }
    Ok(InferenceResult::from_outputs(outputs))
}

/// Fixed-point Monte Carlo inference; logits are dequantized at the end.
pub fn mc_inference_fx<G: GaussianSource + ?Sized>(
    x0: &[f64],
    params: &QuantizedParams,
    n_samples: usize,
    grng: &mut G,
) -> Result<InferenceResult, BnnError> {
    if n_samples == 0 {
        return Err(BnnError::NoSamples);
    }
    if x0.len() != params.topology.inputs() {
        return Err(BnnError::Shape(format!(
            "input has {} features, network expects {}",
            x0.len(),
            params.topology.inputs()
        )));
    }
    let mut scratch = FxScratch::new(params);
    let mut outputs = Array2::zeros((n_samples, params.topology.outputs()));
    for mut row in outputs.outer_iter_mut() {
        scratch.sample(params, grng);
        row.assign(&Array1::from(scratch.forward(params, x0)?));
    }
    Ok(InferenceResult::from_outputs(outputs))
}

#[derive(Debug, Clone, Copy)]
pub enum Model<'a> {
    Float(&'a Posterior),
    Fixed(&'a QuantizedParams),
}

/// How a dataset is pushed through Monte Carlo inference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalOptions {
    pub n_samples: usize,
    pub grng: GrngConfig,
    pub seed: u64,
    /// Images that share one weight draw per MC sample. 1 resamples every
    /// weight for every image.
    pub share: usize,
}

impl EvalOptions {
    pub fn new(grng: GrngConfig, seed: u64) -> Self {
        EvalOptions {
            n_samples: 8,
            grng,
            seed,
            share: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub n_samples: usize,
    pub share: usize,
    pub grng: String,
    /// Mean over images of the predictive std of the winning logit.
    pub mean_predictive_std: f64,
    pub weight_saturations: u64,
    #[serde(skip)]
    pub predictions: Vec<usize>,
}

/// Accuracy of MC-averaged predictions over `data`.
///
/// Images are processed in groups of `opts.share`; group `g` uses a
/// generator seeded with `derive_seed(opts.seed, g)`, so results do not
/// depend on the number of threads.
pub fn evaluate(model: Model<'_>, data: &Dataset, opts: &EvalOptions) -> Result<EvalReport, BnnError> {
    if opts.n_samples == 0 {
        return Err(BnnError::NoSamples);
    }
    let share = opts.share.max(1);
    let inputs = match model {
        Model::Float(p) => p.inputs(),
        Model::Fixed(q) => q.topology.inputs(),
    };
    if data.features() != inputs {
        return Err(BnnError::Shape(format!("dataset has {} features, network expects {}", data.features(), inputs)));
    }
    let groups: Vec<usize> = (0..data.len().div_ceil(share)).collect();
    let per_group = groups
        .par_iter()
        .map(|&g| -> Result<(Vec<usize>, Vec<f64>, u64), BnnError> {
            let lo = g * share;
            let hi = (lo + share).min(data.len());
            let x = data.x.slice(s![lo..hi, ..]);
            let mut grng = opts.grng.build(derive_seed(opts.seed, g as u64)).map_err(BnnError::Config)?;
            let mut outs: Vec<Array2<f64>> = Vec::with_capacity(opts.n_samples);
            let mut saturated = 0u64;
            match model {
                Model::Float(p) => {
                    for _ in 0..opts.n_samples {
                        outs.push(forward_batch(&p.sample(&mut grng), x));
                    }
                }
                Model::Fixed(q) => {
                    let mut scratch = FxScratch::new(q);
                    for _ in 0..opts.n_samples {
                        saturated += scratch.sample(q, &mut grng) as u64;
                        let mut logits = Array2::zeros((hi - lo, q.topology.outputs()));
                        for (row, mut dst) in x.outer_iter().zip(logits.outer_iter_mut()) {
                            let xs: Vec<f64> = row.to_vec();
                            dst.assign(&Array1::from(scratch.forward(q, &xs)?));
                        }
                        outs.push(logits);
                    }
                }
            }
            let mut preds = Vec::with_capacity(hi - lo);
            let mut stds = Vec::with_capacity(hi - lo);
            for i in 0..hi - lo {
                let rows = Array2::from_shape_fn((opts.n_samples, outs[0].ncols()), |(s, c)| outs[s][[i, c]]);
                let r = InferenceResult::from_outputs(rows);
                stds.push(r.predictive_std[r.predicted]);
                preds.push(r.predicted);
            }
            Ok((preds, stds, saturated))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut predictions = Vec::with_capacity(data.len());
    let mut std_sum = 0.0;
    let mut weight_saturations = 0;
    for (p, s, sat) in per_group {
        predictions.extend(p);
        std_sum += s.iter().sum::<f64>();
        weight_saturations += sat;
    }
    let correct = predictions.iter().zip(&data.y).filter(|(p, y)| p == y).count();
    let total = data.len();
    Ok(EvalReport {
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        correct,
        total,
        n_samples: opts.n_samples,
        share,
        grng: opts.grng.kind.to_string(),
        mean_predictive_std: if total == 0 { 0.0 } else { std_sum / total as f64 },
        weight_saturations,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitlengthPoint {
    pub bits: u8,
    pub eps_spec: String,
    pub activation_specs: Vec<String>,
    pub accuracy: f64,
    /// `accuracy - float accuracy`.
    pub delta: f64,
    pub weight_saturations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub float_accuracy: f64,
    pub threshold: f64,
    pub points: Vec<BitlengthPoint>,
    pub smallest_meeting_threshold: Option<u8>,
}

/// Quantizes with [`QuantPlan::Calibrated`] at every bit-length and
/// evaluates each on `test`; the float model is evaluated with the same
/// options for reference.
pub fn bitlength_sweep(
    params: &VariationalParams,
    test: &Dataset,
    calibration: Option<ArrayView2<f64>>,
    bits: &[u8],
    opts: &EvalOptions,
    threshold: f64,
) -> Result<SweepReport, BnnError> {
    let posterior = Posterior::new(params);
    let float_accuracy = evaluate(Model::Float(&posterior), test, opts)?.accuracy;
    let mut points = Vec::with_capacity(bits.len());
    for &b in bits {
        let (q, rep) = quantize_params(params, QuantPlan::Calibrated { bits: b }, calibration)?;
        let r = evaluate(Model::Fixed(&q), test, opts)?;
        log::info!("{b}-bit accuracy {:.4}", r.accuracy);
        points.push(BitlengthPoint {
            bits: b,
            eps_spec: rep.eps_spec,
            activation_specs: rep.activation_specs,
            accuracy: r.accuracy,
            delta: r.accuracy - float_accuracy,
            weight_saturations: r.weight_saturations,
        });
    }
    let smallest_meeting_threshold = points
        .iter()
        .filter(|p| p.accuracy >= threshold)
        .map(|p| p.bits)
        .min();
    Ok(SweepReport {
        float_accuracy,
        threshold,
        points,
        smallest_meeting_threshold,
    })
}
