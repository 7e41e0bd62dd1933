//! Variational Bayesian network engine.
//!
//! Every weight and bias is a Gaussian `N(μ, σ²)` with `σ = ln(1 + e^ρ)`.
//! A forward pass draws one weight set via `w = μ + σ ε`; averaging the
//! outputs of several draws estimates the predictive distribution.

mod infer;
mod pe;
mod quant;

pub use infer::{
    bitlength_sweep, evaluate, mc_inference, mc_inference_fx, BitlengthPoint, EvalOptions, EvalReport,
    InferenceResult, Model, Posterior, SweepReport,
};
pub use pe::{
    cycle_estimate, pe_forward, pe_forward_fx, validate_config, Check, ConfigReport, CycleEstimate,
    FxLayerSpec, PEConfig, Status, PIPELINE_FILL,
};
pub use quant::{
    quantize_params, sample_weights_fx, QLayer, QuantPlan, QuantReport, QuantizedParams, TensorReport,
};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BnnError {
    #[error("topology needs at least 2 layers with positive sizes, got {0:?}")]
    Topology(Vec<usize>),
    #[error("cannot parse topology '{0}'")]
    TopologyParse(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid accelerator config: {0}")]
    Config(String),
    #[error("n_samples must be at least 1")]
    NoSamples,
    #[error(transparent)]
    Fxp(#[from] crate::fxp::FxpError),
}

/// Fully connected layer sizes, input first. Hidden layers use ReLU, the
/// output layer is linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkTopology {
    layer_sizes: Vec<usize>,
}

impl NetworkTopology {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self, BnnError> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(BnnError::Topology(layer_sizes));
        }
        Ok(NetworkTopology { layer_sizes })
    }

    pub fn mnist() -> Self {
        NetworkTopology {
            layer_sizes: vec![784, 200, 200, 10],
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn outputs(&self) -> usize {
        *self.layer_sizes.last().expect("at least 2 layers")
    }

    /// Number of weight layers.
    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// `(fan_in, fan_out)` of every weight layer.
    pub fn shapes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.layer_sizes.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn min_fan_in(&self) -> usize {
        self.shapes().map(|(i, _)| i).min().expect("at least one layer")
    }

    pub fn weight_count(&self) -> usize {
        self.shapes().map(|(i, o)| i * o + o).sum()
    }
}

impl fmt::Display for NetworkTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.layer_sizes.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for NetworkTopology {
    type Err = BnnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let sizes = s
            .split([',', '-'])
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| BnnError::TopologyParse(s.to_string()))?;
        NetworkTopology::new(sizes)
    }
}

/// Variational parameters of one layer; weights are `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub w_mu: Array2<f64>,
    pub w_rho: Array2<f64>,
    pub b_mu: Array1<f64>,
    pub b_rho: Array1<f64>,
}

impl LayerParams {
    pub fn fan_in(&self) -> usize {
        self.w_mu.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.w_mu.nrows()
    }

    pub fn w_sigma(&self) -> Array2<f64> {
        self.w_rho.mapv(sigma_from_rho)
    }

    pub fn b_sigma(&self) -> Array1<f64> {
        self.b_rho.mapv(sigma_from_rho)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalParams {
    topology: NetworkTopology,
    pub layers: Vec<LayerParams>,
}

impl VariationalParams {
    /// Random means scaled by `1/sqrt(fan_in)`, zero biases, constant ρ.
    pub fn init(topology: &NetworkTopology, rho: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = topology
            .shapes()
            .map(|(fan_in, fan_out)| {
                let normal = Normal::new(0.0, (1.0 / fan_in as f64).sqrt()).expect("positive std");
                LayerParams {
                    w_mu: Array2::from_shape_fn((fan_out, fan_in), |_| normal.sample(&mut rng)),
                    w_rho: Array2::from_elem((fan_out, fan_in), rho),
                    b_mu: Array1::zeros(fan_out),
                    b_rho: Array1::from_elem(fan_out, rho),
                }
            })
            .collect();
        VariationalParams {
            topology: topology.clone(),
            layers,
        }
    }

    /// Checks every layer against the shapes implied by the topology.
    pub fn from_layers(layers: Vec<LayerParams>) -> Result<Self, BnnError> {
        let mut sizes = Vec::with_capacity(layers.len() + 1);
        for (l, layer) in layers.iter().enumerate() {
            let (o, i) = layer.w_mu.dim();
            if layer.w_rho.dim() != (o, i) || layer.b_mu.len() != o || layer.b_rho.len() != o {
                return Err(BnnError::Shape(format!("layer {l}: tensor shapes disagree")));
            }
            if let Some(&prev) = sizes.last() {
                if prev != i {
                    return Err(BnnError::Shape(format!(
                        "layer {l} expects {i} inputs but the previous layer has {prev} outputs"
                    )));
                }
            } else {
                sizes.push(i);
            }
            sizes.push(o);
        }
        Ok(VariationalParams {
            topology: NetworkTopology::new(sizes)?,
            layers,
        })
    }

    /// Point-estimate network: ρ = -inf, so σ = 0 everywhere.
    pub fn deterministic(weights: Vec<(Array2<f64>, Array1<f64>)>) -> Result<Self, BnnError> {
        let layers = weights
            .into_iter()
            .map(|(w, b)| LayerParams {
                w_rho: Array2::from_elem(w.dim(), f64::NEG_INFINITY),
                b_rho: Array1::from_elem(b.len(), f64::NEG_INFINITY),
                w_mu: w,
                b_mu: b,
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    /// True when every σ is exactly zero.
    pub fn is_deterministic(&self) -> bool {
        self.layers.iter().all(|l| {
            l.w_rho.iter().all(|&r| sigma_from_rho(r) == 0.0)
                && l.b_rho.iter().all(|&r| sigma_from_rho(r) == 0.0)
        })
    }

    /// Forward pass with `w = μ` for a single input.
    pub fn forward_mean(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            a = dense(&layer.w_mu, layer.b_mu.as_slice().expect("contiguous"), &a, l < last);
        }
        a
    }
}

/// `σ = ln(1 + e^ρ)`, evaluated without overflow; `-inf` maps to 0.
#[inline]
pub fn sigma_from_rho(rho: f64) -> f64 {
    if rho > 30.0 {
        rho
    } else {
        rho.exp().ln_1p()
    }
}

/// `w = μ + ε σ` elementwise.
pub fn sample_weights(mu: &Array2<f64>, sigma: &Array2<f64>, eps: &Array2<f64>) -> Result<Array2<f64>, BnnError> {
    if mu.dim() != sigma.dim() || mu.dim() != eps.dim() {
        return Err(BnnError::Shape(format!(
            "mu {:?}, sigma {:?}, eps {:?}",
            mu.dim(),
            sigma.dim(),
            eps.dim()
        )));
    }
    let mut w = mu.clone();
    Zip::from(&mut w).and(sigma).and(eps).for_each(|w, &s, &e| *w += e * s);
    Ok(w)
}

/// Plain dense layer `W x + b`, optionally followed by ReLU.
pub fn dense(w: &Array2<f64>, b: &[f64], x: &[f64], relu: bool) -> Vec<f64> {
    w.outer_iter()
        .zip(b)
        .map(|(row, &bias)| {
            let s = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias;
            if relu {
                s.max(0.0)
            } else {
                s
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn sigma_examples() {
        assert_abs_diff_eq!(sigma_from_rho(0.0), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(sigma_from_rho(1.0), 1.313_261_687_518_223, epsilon = 1e-12);
        assert_eq!(sigma_from_rho(f64::NEG_INFINITY), 0.0);
        assert_eq!(sigma_from_rho(100.0), 100.0);
        let mut prev = 0.0;
        for k in -400..400 {
            let s = sigma_from_rho(k as f64 / 10.0);
            assert!(s > 0.0 && s >= prev);
            prev = s;
        }
    }

    #[test]
    fn sample_examples() {
        let mu = array![[0.5, -1.0]];
        let sigma = array![[0.25, 2.0]];
        let w = sample_weights(&mu, &sigma, &array![[0.0, 0.0]]).unwrap();
        assert_eq!(w, mu);
        let w = sample_weights(&mu, &sigma, &array![[-2.0, 0.5]]).unwrap();
        assert_eq!(w, array![[0.0, 0.0]]);
        assert!(sample_weights(&mu, &sigma, &array![[0.0]]).is_err());
    }

    #[test]
    fn topology_parsing() {
        let t: NetworkTopology = "784,200,200,10".parse().unwrap();
        assert_eq!(t, NetworkTopology::mnist());
        assert_eq!(t.min_fan_in(), 200);
        assert_eq!(t.depth(), 3);
        assert_eq!(t.to_string(), "784,200,200,10");
        assert!("784".parse::<NetworkTopology>().is_err());
        assert!("784,0,10".parse::<NetworkTopology>().is_err());
        assert!("a,b".parse::<NetworkTopology>().is_err());
    }

    #[test]
    fn from_layers_checks_chaining() {
        let p = VariationalParams::init(&"4,3,2".parse().unwrap(), -3.0, 1);
        let mut layers = p.layers.clone();
        assert!(VariationalParams::from_layers(layers.clone()).is_ok());
        layers.swap(0, 1);
        assert!(VariationalParams::from_layers(layers).is_err());
    }

    #[test]
    fn deterministic_params_have_zero_sigma() {
        let p = VariationalParams::deterministic(vec![(array![[1.0, 2.0]], array![0.5])]).unwrap();
        assert!(p.is_deterministic());
        assert_eq!(p.forward_mean(&[1.0, 1.0]), vec![3.5]);
    }
}
