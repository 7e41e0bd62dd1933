//! Distribution-quality checks for the generators.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete, Normal};
use thiserror::Error;

use crate::grng::{derive_seed, GaussianSource};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("alpha must lie in (0, 0.5), got {0}")]
    Alpha(f64),
    #[error("sum {sum} outside [0, {n}]")]
    SumOutOfRange { sum: u32, n: u32 },
    #[error("only {0} pooled bins with expected count >= 5; need at least 5")]
    TooFewBins(usize),
    #[error("trials must be at least 1")]
    NoTrials,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub mu_error: f64,
    pub sigma_error: f64,
    pub sample_count: usize,
}

/// Absolute errors of the sample mean and unbiased stddev against (0, 1).
pub fn stability(samples: &[f64]) -> Result<StabilityReport, StatsError> {
    let n = samples.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples { need: 2, got: n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(StabilityReport {
        mu_error: mean.abs(),
        sigma_error: (var.sqrt() - 1.0).abs(),
        sample_count: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunsTestResult {
    pub runs: u64,
    pub n_above: u64,
    pub n_below: u64,
    pub z_stat: f64,
    pub passed: bool,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

pub const RUNS_MIN_LEN: usize = 50;

fn median(samples: &[f64]) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Wald-Wolfowitz runs test about the median; values equal to it are dropped.
pub fn runs_test(samples: &[f64], alpha: f64) -> Result<RunsTestResult, StatsError> {
    if samples.len() < RUNS_MIN_LEN {
        return Err(StatsError::TooFewSamples {
            need: RUNS_MIN_LEN,
            got: samples.len(),
        });
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(StatsError::Alpha(alpha));
    }
    let med = median(samples);
    let mut runs = 0u64;
    let (mut above, mut below) = (0u64, 0u64);
    let mut prev = None;
    for &x in samples {
        if x == med {
            continue;
        }
        let up = x > med;
        if up {
            above += 1;
        } else {
            below += 1;
        }
        if prev != Some(up) {
            runs += 1;
        }
        prev = Some(up);
    }
    if above == 0 || below == 0 {
        return Ok(RunsTestResult {
            runs,
            n_above: above,
            n_below: below,
            z_stat: f64::NAN,
            passed: false,
            alpha,
            diagnostic: Some("degenerate sequence: all retained values on one side of the median".into()),
        });
    }
    let (n1, n2) = (above as f64, below as f64);
    let n = n1 + n2;
    let mu = 2.0 * n1 * n2 / n + 1.0;
    let var = 2.0 * n1 * n2 * (2.0 * n1 * n2 - n1 - n2) / (n * n * (n - 1.0));
    let z = (runs as f64 - mu) / var.sqrt();
    Ok(RunsTestResult {
        runs,
        n_above: above,
        n_below: below,
        z_stat: z,
        passed: z.abs() < critical_z(alpha),
        alpha,
        diagnostic: None,
    })
}

/// Two-sided standard normal critical value.
pub fn critical_z(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassRate {
    pub rate: f64,
    pub passed: usize,
    pub trials: usize,
    pub samples_per_trial: usize,
    pub alpha: f64,
    pub master_seed: u64,
}

/// Fraction of independent trials passing the runs test.
///
/// Trial `i` builds its generator from `derive_seed(master_seed, i)`, so
/// the result does not depend on how rayon schedules the trials.
pub fn pass_rate<S, F>(
    make: F,
    trials: usize,
    samples_per_trial: usize,
    alpha: f64,
    master_seed: u64,
) -> Result<PassRate, StatsError>
where
    S: GaussianSource,
    F: Fn(u64) -> S + Sync,
{
    if trials == 0 {
        return Err(StatsError::NoTrials);
    }
    let results: Vec<bool> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = make(derive_seed(master_seed, i));
            let mut buf = vec![0.0; samples_per_trial];
            g.fill(&mut buf);
            runs_test(&buf, alpha).map(|r| r.passed)
        })
        .collect::<Result<_, _>>()?;
    let passed = results.iter().filter(|&&p| p).count();
    Ok(PassRate {
        rate: passed as f64 / trials as f64,
        passed,
        trials,
        samples_per_trial,
        alpha,
        master_seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofResult {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Chi-square goodness of fit of integer sums against B(n, p).
///
/// Adjacent outcomes are pooled from the left until each bin expects at
/// least five counts; a short remainder joins the last full bin.
pub fn binomial_gof(sums: &[u32], n: u32, p: f64) -> Result<GofResult, StatsError> {
    if let Some(&bad) = sums.iter().find(|&&s| s > n) {
        return Err(StatsError::SumOutOfRange { sum: bad, n });
    }
    let total = sums.len() as f64;
    let mut observed = vec![0u64; n as usize + 1];
    for &s in sums {
        observed[s as usize] += 1;
    }
    let dist = Binomial::new(p, n as u64).expect("p in [0, 1]");
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for k in 0..=n {
        e_acc += total * dist.pmf(k as u64);
        o_acc += observed[k as usize] as f64;
        if e_acc >= 5.0 {
            bins.push((o_acc, e_acc));
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    if let Some(last) = bins.last_mut() {
        last.0 += o_acc;
        last.1 += e_acc;
    }
    if bins.len() < 5 {
        return Err(StatsError::TooFewBins(bins.len()));
    }
    let chi2: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = bins.len() - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof >= 4").cdf(chi2);
    Ok(GofResult {
        chi2,
        dof,
        p_value,
        bins: bins.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grng::ReferenceGaussian;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Distribution;

    #[test]
    fn stability_examples() {
        let r = stability(&[0.0; 10]).unwrap();
        assert_eq!((r.mu_error, r.sigma_error), (0.0, 1.0));
        let two: Vec<f64> = (0..10_000).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let r = stability(&two).unwrap();
        assert_eq!(r.mu_error, 0.0);
        assert!(r.sigma_error < 1e-4);
        assert!(stability(&[1.0]).is_err());
    }

    #[test]
    fn alternating_has_too_many_runs() {
        let s: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let r = runs_test(&s, 0.05).unwrap();
        assert_eq!(r.runs, 1000);
        assert!(r.z_stat > 30.0);
        assert!(!r.passed);
    }

    #[test]
    fn two_blocks_have_too_few_runs() {
        let s: Vec<f64> = (0..1000).map(|i| if i < 500 { -1.0 } else { 1.0 }).collect();
        let r = runs_test(&s, 0.05).unwrap();
        assert_eq!(r.runs, 2);
        assert!(!r.passed);
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        let r = runs_test(&[3.0; 100], 0.05).unwrap();
        assert!(!r.passed);
        assert!(r.diagnostic.is_some());
        assert!(runs_test(&[0.0; 49], 0.05).is_err());
        assert!(runs_test(&[0.0; 60], 0.5).is_err());
        assert!(runs_test(&[0.0; 60], 0.0).is_err());
    }

    #[test]
    fn critical_value() {
        assert_abs_diff_eq!(critical_z(0.05), 1.959_963_984_540_054, epsilon = 1e-9);
    }

    #[test]
    fn reference_pass_rate_is_calibrated() {
        let r = pass_rate(ReferenceGaussian::new, 1000, 1000, 0.05, 3).unwrap();
        assert!((0.92..=0.98).contains(&r.rate), "{}", r.rate);
    }

    #[test]
    fn gof_on_true_binomial() {
        let dist = rand_distr::Binomial::new(255, 0.5).unwrap();
        let mut ok = 0;
        for seed in 0..40 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sums: Vec<u32> = (0..100_000).map(|_| dist.sample(&mut rng) as u32).collect();
            if binomial_gof(&sums, 255, 0.5).unwrap().p_value > 0.01 {
                ok += 1;
            }
        }
        assert!(ok >= 37, "{ok}/40");
    }

    #[test]
    fn gof_on_constant_stream() {
        let r = binomial_gof(&[128; 10_000], 255, 0.5).unwrap();
        assert!(r.p_value < 1e-12);
        assert!(binomial_gof(&[128; 5], 255, 0.5).is_err());
        assert!(binomial_gof(&[300], 255, 0.5).is_err());
    }
}
