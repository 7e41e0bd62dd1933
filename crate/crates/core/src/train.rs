//! Float trainers: Bayes by Backprop for the variational network and a
//! dropout FNN baseline.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bnn::{sigma_from_rho, BnnError, LayerParams, NetworkTopology, VariationalParams};
use crate::data::Dataset;

const DEFAULTS: &str = include_str!("../config/train_defaults.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("dataset has {got} features, topology expects {want}")]
    Features { got: usize, want: usize },
    #[error("dataset has {got} classes, topology has {want} outputs")]
    Classes { got: usize, want: usize },
    #[error("loss diverged at epoch {epoch}, batch {batch}: loss={loss}, max |mu|={max_mu}")]
    Diverged {
        epoch: usize,
        batch: usize,
        loss: f64,
        max_mu: f64,
    },
    #[error(transparent)]
    Bnn(#[from] BnnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub lr_decay: f64,
    pub prior_std: f64,
    /// Weight of the KL term per minibatch; `None` uses 1 / minibatches.
    #[serde(default)]
    pub kl_weight: Option<f64>,
    pub rho_init: f64,
    pub data_fraction: f64,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        toml::from_str(DEFAULTS).expect("bundled defaults parse")
    }
}

impl TrainConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail too
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive");
        }
        if !(self.learning_rate > 0.0) || !(self.prior_std > 0.0) {
            return bad("learning_rate and prior_std must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) || !(self.lr_decay > 0.0) {
            return bad("momentum must lie in [0, 1) and lr_decay must be positive");
        }
        if self.kl_weight.is_some_and(|k| !(k >= 0.0)) {
            return bad("kl_weight must be non-negative");
        }
        if !(self.data_fraction > 0.0 && self.data_fraction <= 1.0) {
            return bad("data_fraction must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-example loss (NLL plus the weighted KL share).
    pub loss: f64,
    pub train_accuracy: f64,
    pub kl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainHistory {
    pub examples: usize,
    pub batches_per_epoch: usize,
    pub kl_weight: f64,
    pub epochs: Vec<EpochStats>,
}

/// `KL(N(μ, σ²) || N(0, s²))` summed over all entries.
pub fn kl_gaussian(mu: &[f64], sigma: &[f64], prior_std: f64) -> f64 {
    let s2 = prior_std * prior_std;
    mu.iter()
        .zip(sigma)
        .map(|(m, s)| (prior_std / s).ln() + (s * s + m * m) / (2.0 * s2) - 0.5)
        .sum()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Gradients of one network with respect to weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGrads {
    pub w: Vec<Array2<f64>>,
    pub b: Vec<Array1<f64>>,
}

struct Pass {
    nll: f64,
    correct: usize,
    grads: NetGrads,
}

/// Softmax cross-entropy summed over the batch, with backprop. `masks`
/// multiply the hidden activations (inverted dropout).
fn backprop(weights: &[(Array2<f64>, Array1<f64>)], x: ArrayView2<f64>, y: &[usize], masks: Option<&[Array2<f64>]>) -> Pass {
    let depth = weights.len();
    let mut acts: Vec<Array2<f64>> = Vec::with_capacity(depth + 1);
    acts.push(x.to_owned());
    for (l, (w, b)) in weights.iter().enumerate() {
        let mut z = acts[l].dot(&w.t()) + b;
        if l + 1 < depth {
            z.mapv_inplace(|v| v.max(0.0));
            if let Some(m) = masks {
                z *= &m[l];
            }
        }
        acts.push(z);
    }
    let mut delta = acts[depth].clone();
    let mut nll = 0.0;
    let mut correct = 0;
    for (mut row, &label) in delta.outer_iter_mut().zip(y) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let argmax = row.iter().position(|&v| v == max).expect("row has a max");
        correct += (argmax == label) as usize;
        let zy = row[label];
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        nll += sum.ln() - (zy - max);
        row /= sum;
        row[label] -= 1.0;
    }
    let mut gw = vec![Array2::zeros((0, 0)); depth];
    let mut gb = vec![Array1::zeros(0); depth];
    for l in (0..depth).rev() {
        gw[l] = delta.t().dot(&acts[l]);
        gb[l] = delta.sum_axis(Axis(0));
        if l > 0 {
            let mut d = delta.dot(&weights[l].0);
            // acts[l] is post-ReLU (and post-mask): zero exactly where the
            // gradient is blocked.
            Zip::from(&mut d).and(&acts[l]).for_each(|d, &a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
            if let Some(m) = masks {
                d *= &m[l - 1];
            }
            delta = d;
        }
    }
    Pass {
        nll,
        correct,
        grads: NetGrads { w: gw, b: gb },
    }
}

/// Gradient of `kl_weight * KL + NLL(μ + σ ε)` with respect to μ and ρ for
/// a fixed ε; biases are treated like weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ElboGrad {
    pub loss: f64,
    pub nll: f64,
    pub kl: f64,
    pub mu: NetGrads,
    pub rho: NetGrads,
}

pub fn elbo_grad(
    params: &VariationalParams,
    eps: &NetGrads,
    x: ArrayView2<f64>,
    y: &[usize],
    kl_weight: f64,
    prior_std: f64,
) -> ElboGrad {
    elbo_grad_inner(params, eps, x, y, kl_weight, prior_std).0
}

fn elbo_grad_inner(
    params: &VariationalParams,
    eps: &NetGrads,
    x: ArrayView2<f64>,
    y: &[usize],
    kl_weight: f64,
    prior_std: f64,
) -> (ElboGrad, usize) {
    let s2 = prior_std * prior_std;
    let weights: Vec<(Array2<f64>, Array1<f64>)> = params
        .layers
        .iter()
        .zip(eps.w.iter().zip(&eps.b))
        .map(|(l, (ew, eb))| {
            let mut w = l.w_mu.clone();
            Zip::from(&mut w).and(&l.w_rho).and(ew).for_each(|w, &r, &e| *w += sigma_from_rho(r) * e);
            let mut b = l.b_mu.clone();
            Zip::from(&mut b).and(&l.b_rho).and(eb).for_each(|b, &r, &e| *b += sigma_from_rho(r) * e);
            (w, b)
        })
        .collect();
    let pass = backprop(&weights, x, y, None);
    let mut kl = 0.0;
    let mut mu = NetGrads { w: vec![], b: vec![] };
    let mut rho = NetGrads { w: vec![], b: vec![] };
    for (l, layer) in params.layers.iter().enumerate() {
        let (gm, gr, k) = variational_grads(&pass.grads.w[l], &layer.w_mu, &layer.w_rho, &eps.w[l], kl_weight, s2, prior_std);
        mu.w.push(gm);
        rho.w.push(gr);
        kl += k;
        let (gm, gr, k) = variational_grads(&pass.grads.b[l], &layer.b_mu, &layer.b_rho, &eps.b[l], kl_weight, s2, prior_std);
        mu.b.push(gm);
        rho.b.push(gr);
        kl += k;
    }
    (
        ElboGrad {
            loss: kl_weight * kl + pass.nll,
            nll: pass.nll,
            kl,
            mu,
            rho,
        },
        pass.correct,
    )
}

/// Chain rule through `w = μ + σ(ρ) ε` plus the closed-form KL gradient.
fn variational_grads<D: ndarray::Dimension>(
    g: &ndarray::Array<f64, D>,
    mu: &ndarray::Array<f64, D>,
    rho: &ndarray::Array<f64, D>,
    eps: &ndarray::Array<f64, D>,
    kl_weight: f64,
    s2: f64,
    prior_std: f64,
) -> (ndarray::Array<f64, D>, ndarray::Array<f64, D>, f64) {
    let mut gm = g.clone();
    let mut gr = g.clone();
    let mut kl = 0.0;
    Zip::from(&mut gm)
        .and(&mut gr)
        .and(mu)
        .and(rho)
        .and(eps)
        .for_each(|gm, gr, &m, &r, &e| {
            let s = sigma_from_rho(r);
            kl += (prior_std / s).ln() + (s * s + m * m) / (2.0 * s2) - 0.5;
            *gm += kl_weight * m / s2;
            *gr = (*gr * e + kl_weight * (s / s2 - 1.0 / s)) * logistic(r);
        });
    (gm, gr, kl)
}

/// Stratified subsample of `round(fraction * len)` examples; per-class
/// quotas use largest remainders. Indices keep their original order.
pub fn subsample(data: &Dataset, fraction: f64, seed: u64) -> Result<Dataset, TrainError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(TrainError::Config(format!("fraction {fraction} outside (0, 1]")));
    }
    if fraction == 1.0 {
        return Ok(data.clone());
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); data.classes];
    for (i, &c) in data.y.iter().enumerate() {
        by_class[c].push(i);
    }
    let target = (fraction * data.len() as f64).round() as usize;
    let exact: Vec<f64> = by_class.iter().map(|v| v.len() as f64 * fraction).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..quota.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let short = target.saturating_sub(quota.iter().sum());
    for &c in order.iter().take(short) {
        quota[c] += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(target);
    for (c, members) in by_class.iter_mut().enumerate() {
        if quota[c] == 0 && !members.is_empty() {
            log::warn!("class {c} vanishes at fraction {fraction}");
        }
        members.shuffle(&mut rng);
        picked.extend_from_slice(&members[..quota[c].min(members.len())]);
    }
    picked.sort_unstable();
    Ok(data.subset(&picked))
}

fn check_data(data: &Dataset, topo: &NetworkTopology) -> Result<(), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if data.features() != topo.inputs() {
        return Err(TrainError::Features {
            got: data.features(),
            want: topo.inputs(),
        });
    }
    if data.classes > topo.outputs() {
        return Err(TrainError::Classes {
            got: data.classes,
            want: topo.outputs(),
        });
    }
    Ok(())
}

fn max_abs_mu(p: &VariationalParams) -> f64 {
    p.layers
        .iter()
        .flat_map(|l| l.w_mu.iter().chain(l.b_mu.iter()))
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Momentum SGD state over a flat list of tensors.
struct Momentum {
    velocity: Vec<Vec<f64>>,
    momentum: f64,
}

impl Momentum {
    fn new(sizes: impl Iterator<Item = usize>, momentum: f64) -> Self {
        Momentum {
            velocity: sizes.map(|n| vec![0.0; n]).collect(),
            momentum,
        }
    }

    fn apply<'a>(&mut self, params: impl Iterator<Item = &'a mut [f64]>, grads: impl Iterator<Item = &'a [f64]>, lr: f64) {
        for ((p, g), v) in params.zip(grads).zip(&mut self.velocity) {
            for ((p, g), v) in p.iter_mut().zip(g).zip(v.iter_mut()) {
                *v = self.momentum * *v - lr * g;
                *p += *v;
            }
        }
    }
}

fn standard_normal_like(rng: &mut ChaCha8Rng, p: &VariationalParams) -> NetGrads {
    NetGrads {
        w: p
            .layers
            .iter()
            .map(|l| Array2::from_shape_simple_fn(l.w_mu.dim(), || rng.sample(StandardNormal)))
            .collect(),
        b: p
            .layers
            .iter()
            .map(|l| Array1::from_shape_simple_fn(l.b_mu.len(), || rng.sample(StandardNormal)))
            .collect(),
    }
}

/// Bayes by Backprop with one ε draw per minibatch. The minibatch loss is
/// `(kl_weight * KL + sum of NLL) / batch_size`.
pub fn train_bbb(data: &Dataset, topo: &NetworkTopology, cfg: &TrainConfig) -> Result<(VariationalParams, TrainHistory), TrainError> {
    cfg.validate()?;
    let data = subsample(data, cfg.data_fraction, cfg.seed)?;
    check_data(&data, topo)?;
    let mut params = VariationalParams::init(topo, cfg.rho_init, cfg.seed);
    let batches = data.len().div_ceil(cfg.batch_size);
    let kl_weight = cfg.kl_weight.unwrap_or(1.0 / batches as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xbbb);
    let sizes: Vec<usize> = params
        .layers
        .iter()
        .flat_map(|l| [l.w_mu.len(), l.b_mu.len(), l.w_rho.len(), l.b_rho.len()])
        .collect();
    let mut opt = Momentum::new(sizes.into_iter(), cfg.momentum);
    let mut lr = cfg.learning_rate;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct, mut kl_last) = (0.0, 0, 0.0);
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x = data.x.select(Axis(0), idx);
            let y: Vec<usize> = idx.iter().map(|&i| data.y[i]).collect();
            let eps = standard_normal_like(&mut rng, &params);
            let (g, c) = elbo_grad_inner(&params, &eps, x.view(), &y, kl_weight, cfg.prior_std);
            if !g.loss.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    batch,
                    loss: g.loss,
                    max_mu: max_abs_mu(&params),
                });
            }
            loss_sum += g.loss;
            correct += c;
            kl_last = g.kl;
            let scale = lr / idx.len() as f64;
            let grads = g
                .mu
                .w
                .iter()
                .zip(&g.mu.b)
                .zip(g.rho.w.iter().zip(&g.rho.b))
                .flat_map(|((mw, mb), (rw, rb))| {
                    [
                        mw.as_slice().expect("contiguous"),
                        mb.as_slice().expect("contiguous"),
                        rw.as_slice().expect("contiguous"),
                        rb.as_slice().expect("contiguous"),
                    ]
                });
            let tensors = params.layers.iter_mut().flat_map(|l: &mut LayerParams| {
                [
                    l.w_mu.as_slice_mut().expect("contiguous"),
                    l.b_mu.as_slice_mut().expect("contiguous"),
                    l.w_rho.as_slice_mut().expect("contiguous"),
                    l.b_rho.as_slice_mut().expect("contiguous"),
                ]
            });
            opt.apply(tensors, grads, scale);
        }
        let stats = EpochStats {
            epoch,
            loss: loss_sum / data.len() as f64,
            train_accuracy: correct as f64 / data.len() as f64,
            kl: kl_last,
        };
        log::info!(
            "bbb epoch {epoch}: loss {:.4}, train acc {:.4}, kl {:.1}",
            stats.loss,
            stats.train_accuracy,
            stats.kl
        );
        history.push(stats);
        lr *= cfg.lr_decay;
    }
    Ok((
        params,
        TrainHistory {
            examples: data.len(),
            batches_per_epoch: batches,
            kl_weight,
            epochs: history,
        },
    ))
}

/// Plain backprop with inverted dropout on the hidden layers; the result
/// is a point-estimate network (σ = 0).
pub fn train_fnn_dropout(
    data: &Dataset,
    topo: &NetworkTopology,
    cfg: &TrainConfig,
) -> Result<(VariationalParams, TrainHistory), TrainError> {
    cfg.validate()?;
    let data = subsample(data, cfg.data_fraction, cfg.seed)?;
    check_data(&data, topo)?;
    let init = VariationalParams::init(topo, f64::NEG_INFINITY, cfg.seed);
    let mut weights: Vec<(Array2<f64>, Array1<f64>)> = init.layers.into_iter().map(|l| (l.w_mu, l.b_mu)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xf00);
    let sizes: Vec<usize> = weights.iter().flat_map(|(w, b)| [w.len(), b.len()]).collect();
    let mut opt = Momentum::new(sizes.into_iter(), cfg.momentum);
    let keep = 1.0 - cfg.dropout;
    let mut lr = cfg.learning_rate;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0);
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x = data.x.select(Axis(0), idx);
            let y: Vec<usize> = idx.iter().map(|&i| data.y[i]).collect();
            let masks: Vec<Array2<f64>> = topo.sizes()[1..topo.sizes().len() - 1]
                .iter()
                .map(|&h| {
                    Array2::from_shape_simple_fn((idx.len(), h), || if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                })
                .collect();
            let pass = backprop(&weights, x.view(), &y, (cfg.dropout > 0.0).then_some(&masks[..]));
            if !pass.nll.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    batch,
                    loss: pass.nll,
                    max_mu: weights.iter().flat_map(|(w, _)| w.iter()).fold(0.0f64, |m, v| m.max(v.abs())),
                });
            }
            loss_sum += pass.nll;
            correct += pass.correct;
            let grads = pass
                .grads
                .w
                .iter()
                .zip(&pass.grads.b)
                .flat_map(|(w, b)| [w.as_slice().expect("contiguous"), b.as_slice().expect("contiguous")]);
            let tensors = weights
                .iter_mut()
                .flat_map(|(w, b)| [w.as_slice_mut().expect("contiguous"), b.as_slice_mut().expect("contiguous")]);
            opt.apply(tensors, grads, lr / idx.len() as f64);
        }
        let stats = EpochStats {
            epoch,
            loss: loss_sum / data.len() as f64,
            train_accuracy: correct as f64 / data.len() as f64,
            kl: 0.0,
        };
        log::info!("fnn epoch {epoch}: loss {:.4}, train acc {:.4}", stats.loss, stats.train_accuracy);
        history.push(stats);
        lr *= cfg.lr_decay;
    }
    Ok((
        VariationalParams::deterministic(weights)?,
        TrainHistory {
            examples: data.len(),
            batches_per_epoch: data.len().div_ceil(cfg.batch_size),
            kl_weight: 0.0,
            epochs: history,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wallace::icdf;
    use ndarray::array;

    fn toy_params() -> VariationalParams {
        let mut p = VariationalParams::init(&"2,2,2".parse().unwrap(), -1.5, 4);
        p.layers[0].b_mu = array![0.3, -0.2];
        p.layers[1].w_rho[[0, 1]] = -0.5;
        p
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = toy_params();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let eps = standard_normal_like(&mut rng, &p);
        let x = array![[0.7, -1.2], [1.5, 0.4], [-0.3, 0.9]];
        let y = [0, 1, 1];
        let (kl_w, prior) = (0.3, 0.5);
        let g = elbo_grad(&p, &eps, x.view(), &y, kl_w, prior);
        let loss = |q: &VariationalParams| elbo_grad(q, &eps, x.view(), &y, kl_w, prior).loss;
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for l in 0..2 {
            for (which, analytic) in [(0, &g.mu.w[l]), (1, &g.rho.w[l])] {
                for (idx, &a) in analytic.indexed_iter() {
                    let mut plus = p.clone();
                    let mut minus = p.clone();
                    let (tp, tm) = if which == 0 {
                        (&mut plus.layers[l].w_mu, &mut minus.layers[l].w_mu)
                    } else {
                        (&mut plus.layers[l].w_rho, &mut minus.layers[l].w_rho)
                    };
                    tp[idx] += h;
                    tm[idx] -= h;
                    let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                    worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3));
                }
            }
            for (idx, &a) in g.mu.b[l].indexed_iter() {
                let mut plus = p.clone();
                let mut minus = p.clone();
                plus.layers[l].b_mu[idx] += h;
                minus.layers[l].b_mu[idx] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3));
            }
            for (idx, &a) in g.rho.b[l].indexed_iter() {
                let mut plus = p.clone();
                let mut minus = p.clone();
                plus.layers[l].b_rho[idx] += h;
                minus.layers[l].b_rho[idx] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3));
            }
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn closed_form_kl_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let prior: f64 = 0.7;
        for _ in 0..5 {
            let mu: f64 = rng.random_range(-1.0..1.0);
            let sigma = sigma_from_rho(rng.random_range(-3.0..1.0));
            let n = 200_000;
            let terms: Vec<f64> = (0..n)
                .map(|_| {
                    let e = icdf(rng.random_range(1e-12..1.0));
                    let w = mu + sigma * e;
                    // log q(w) - log p(w); the 2π terms cancel.
                    -(sigma.ln()) - 0.5 * e * e + prior.ln() + 0.5 * (w / prior).powi(2)
                })
                .collect();
            let mean = terms.iter().sum::<f64>() / n as f64;
            let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            let exact = kl_gaussian(&[mu], &[sigma], prior);
            assert!((mean - exact).abs() < 3.0 * se, "mc {mean} exact {exact} se {se}");
        }
    }

    fn blobs(n: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            let centre = if y[i] == 1 { 2.0 } else { -2.0 };
            centre * if j == 0 { 1.0 } else { 0.5 } + rng.random_range(-0.5..0.5)
        });
        Dataset::new(x, y, 2)
    }

    fn quick_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 30,
            batch_size: 8,
            lr_decay: 1.0,
            data_fraction: 1.0,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn bundled_defaults_are_valid() {
        let cfg = TrainConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.kl_weight, None);
        let mut bad = cfg.clone();
        bad.data_fraction = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn fnn_separates_blobs() {
        let data = blobs(64);
        let cfg = TrainConfig { dropout: 0.0, ..quick_cfg() };
        let (p, _) = train_fnn_dropout(&data, &"2,8,2".parse().unwrap(), &cfg).unwrap();
        let correct = data
            .x
            .outer_iter()
            .zip(&data.y)
            .filter(|(x, &y)| {
                let out = p.forward_mean(x.as_slice().unwrap());
                (out[1] > out[0]) as usize == y
            })
            .count();
        assert_eq!(correct, 64);
    }

    #[test]
    fn single_point_loss_decreases() {
        let data = blobs(1);
        let cfg = TrainConfig {
            batch_size: 1,
            momentum: 0.0,
            learning_rate: 0.05,
            prior_std: 1.0,
            ..quick_cfg()
        };
        let (_, h) = train_bbb(&data, &"2,4,2".parse().unwrap(), &cfg).unwrap();
        let losses: Vec<f64> = h.epochs.iter().map(|e| e.loss).collect();
        for w in losses.windows(2) {
            assert!(w[1] < w[0], "{losses:?}");
        }
    }

    #[test]
    fn bbb_training_is_deterministic() {
        let data = blobs(40);
        let topo = "2,6,2".parse().unwrap();
        let a = train_bbb(&data, &topo, &quick_cfg()).unwrap().0;
        let b = train_bbb(&data, &topo, &quick_cfg()).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn subsample_is_stratified() {
        let y: Vec<usize> = (0..60_000).map(|i| (i * 7) % 10).collect();
        let data = Dataset::new(Array2::zeros((60_000, 1)), y, 10);
        let s = subsample(&data, 1.0 / 256.0, 5).unwrap();
        assert_eq!(s.len(), 234);
        assert!(s.class_counts().iter().all(|&c| c == 23 || c == 24));
        assert_eq!(s, subsample(&data, 1.0 / 256.0, 5).unwrap());
        assert_eq!(subsample(&data, 1.0, 5).unwrap().len(), 60_000);
        assert!(subsample(&data, 0.0, 5).is_err());
    }
}
