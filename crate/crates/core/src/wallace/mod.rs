//! Wallace-method Gaussian generators.
//!
//! A pool of Gaussian numbers is renewed by the orthogonal 4-point
//! transform [`hadamard4`]; orthogonal combinations of independent
//! Gaussians are again Gaussian, so no uniform-to-normal conversion is
//! needed after the pool has been initialized.

mod ring;
mod software;

pub use ring::{RingMode, WallaceRing};
pub use software::{SoftwareWallace, WallaceNss};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fxp::FixedSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WallaceError {
    #[error("pool size {0} is not a positive multiple of 4")]
    PoolSize(usize),
    #[error("unit count must be at least 1")]
    NoUnits,
    #[error("loops must be at least 1")]
    Loops,
}

/// `t = (x1+x2+x3+x4)/2`, returning `(t-x1, t-x2, x3-t, x4-t)`.
#[inline]
pub fn hadamard4(x: [f64; 4]) -> [f64; 4] {
    let t = 0.5 * (x[0] + x[1] + x[2] + x[3]);
    [t - x[0], t - x[1], x[2] - t, x[3] - t]
}

/// Fixed-point transform on raw values: the halving is a one-bit
/// arithmetic shift and every output saturates to `spec`.
#[inline]
pub fn hadamard4_fixed(x: [i64; 4], spec: FixedSpec) -> ([i64; 4], bool) {
    let t = (x[0] + x[1] + x[2] + x[3]) >> 1;
    let raw = [t - x[0], t - x[1], x[2] - t, x[3] - t];
    let mut saturated = false;
    let out = raw.map(|v| {
        let (v, s) = spec.saturate(v);
        saturated |= s;
        v
    });
    (out, saturated)
}

/// Inverse of the standard normal CDF.
///
/// Rational approximation with a central region and two tails; relative
/// error below 1.2e-9 on (0, 1). Returns `±inf` at the endpoints and NaN
/// outside [0, 1].
pub fn icdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    if p < P_LOW {
        tail(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(1.0 - p)
    }
}

/// Open-interval uniform in (0, 1) from 53 random bits.
#[inline]
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// A fixed-size pool of Gaussian numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct WallacePool {
    values: Vec<f64>,
}

impl WallacePool {
    pub fn from_values(values: Vec<f64>) -> Result<Self, WallaceError> {
        if values.is_empty() || !values.len().is_multiple_of(4) {
            return Err(WallaceError::PoolSize(values.len()));
        }
        Ok(WallacePool { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// `size` i.i.d. N(0, 1) draws by CDF inversion of a seeded uniform stream.
pub fn init_pool(size: usize, seed: u64) -> Result<WallacePool, WallaceError> {
    if size == 0 || !size.is_multiple_of(4) {
        return Err(WallaceError::PoolSize(size));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WallacePool::from_values((0..size).map(|_| icdf(open_unit(&mut rng))).collect())
}
