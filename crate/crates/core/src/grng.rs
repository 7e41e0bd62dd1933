//! Common interface over the Gaussian generators.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fxp::{quantize, FixedSpec, FxVal};
use crate::rlf::{LfsrUniform, RlfGrng};
use crate::wallace::{icdf, open_unit, RingMode, SoftwareWallace, WallaceNss, WallaceRing};

/// A stream of approximately N(0, 1) numbers.
pub trait GaussianSource {
    fn next_gaussian(&mut self) -> f64;

    fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next_gaussian();
        }
    }

    /// Next sample on a fixed-point grid, saturating out-of-range values.
    fn next_fx(&mut self, spec: FixedSpec) -> FxVal {
        quantize(self.next_gaussian(), spec)
    }
}

impl GaussianSource for RlfGrng {
    fn next_gaussian(&mut self) -> f64 {
        self.next_standard()
    }
}

impl GaussianSource for WallaceRing {
    fn next_gaussian(&mut self) -> f64 {
        self.next_value()
    }
}

impl<R: rand::RngCore> GaussianSource for SoftwareWallace<R> {
    fn next_gaussian(&mut self) -> f64 {
        self.next_value()
    }
}

impl GaussianSource for WallaceNss {
    fn next_gaussian(&mut self) -> f64 {
        self.next_value()
    }
}

impl<S: GaussianSource + ?Sized> GaussianSource for Box<S> {
    fn next_gaussian(&mut self) -> f64 {
        (**self).next_gaussian()
    }
}

/// Inverse-CDF sampler over ChaCha8; the statistical reference.
#[derive(Debug, Clone)]
pub struct ReferenceGaussian {
    rng: ChaCha8Rng,
}

impl ReferenceGaussian {
    pub fn new(seed: u64) -> Self {
        ReferenceGaussian {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl GaussianSource for ReferenceGaussian {
    fn next_gaussian(&mut self) -> f64 {
        icdf(open_unit(&mut self.rng))
    }
}

/// Replays a fixed list, then zeros. Useful for forcing ε in tests.
#[derive(Debug, Clone, Default)]
pub struct Scripted {
    values: Vec<f64>,
    pos: usize,
}

impl Scripted {
    pub fn new(values: Vec<f64>) -> Self {
        Scripted { values, pos: 0 }
    }

    pub fn zeros() -> Self {
        Scripted::default()
    }
}

impl GaussianSource for Scripted {
    fn next_gaussian(&mut self) -> f64 {
        let v = self.values.get(self.pos).copied().unwrap_or(0.0);
        self.pos += 1;
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrngKind {
    Rlf,
    /// Sharing/shifting ring.
    Wallace,
    Software,
    Nss,
    Reference,
}

impl GrngKind {
    pub const ALL: [GrngKind; 5] = [
        GrngKind::Rlf,
        GrngKind::Wallace,
        GrngKind::Software,
        GrngKind::Nss,
        GrngKind::Reference,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GrngKind::Rlf => "rlf",
            GrngKind::Wallace => "wallace",
            GrngKind::Software => "software",
            GrngKind::Nss => "nss",
            GrngKind::Reference => "reference",
        }
    }
}

impl fmt::Display for GrngKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GrngKind {
    type Err = String;

    /// `ring` is accepted as another name for the sharing/shifting ring.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ring" {
            return Ok(GrngKind::Wallace);
        }
        GrngKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown generator '{s}' (expected rlf, wallace, software, nss or reference)"))
    }
}

/// Everything needed to rebuild a generator from a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrngConfig {
    pub kind: GrngKind,
    /// RLF lanes.
    pub lanes: usize,
    /// Wallace ring units.
    pub units: usize,
    /// Pool size per Wallace unit, or of the single software/NSS pool.
    pub pool: usize,
    /// Transform passes per software Wallace block.
    pub loops: usize,
    /// Fixed-point datapath for the ring and NSS pools.
    pub fixed: Option<FixedSpec>,
}

impl GrngConfig {
    pub fn new(kind: GrngKind) -> Self {
        let pool = match kind {
            GrngKind::Software => 4096,
            _ => 256,
        };
        let fixed = match kind {
            GrngKind::Nss => Some(FixedSpec::Q8_5),
            _ => None,
        };
        GrngConfig {
            kind,
            lanes: RlfGrng::DEFAULT_LANES,
            units: WallaceRing::DEFAULT_UNITS,
            pool,
            loops: 2,
            fixed,
        }
    }

    pub fn build(&self, seed: u64) -> Result<Box<dyn GaussianSource + Send>, String> {
        Ok(match self.kind {
            GrngKind::Rlf => Box::new(RlfGrng::with_lanes(seed, self.lanes).map_err(|e| e.to_string())?),
            GrngKind::Wallace => {
                let mode = self.fixed.map_or(RingMode::Real, RingMode::Fixed);
                Box::new(WallaceRing::new(self.units, self.pool, seed, mode).map_err(|e| e.to_string())?)
            }
            GrngKind::Software => Box::new(
                SoftwareWallace::<LfsrUniform>::new(self.pool, self.loops, seed).map_err(|e| e.to_string())?,
            ),
            GrngKind::Nss => {
                let mode = self.fixed.map_or(RingMode::Real, RingMode::Fixed);
                Box::new(WallaceNss::with_mode(self.pool, seed, mode).map_err(|e| e.to_string())?)
            }
            GrngKind::Reference => Box::new(ReferenceGaussian::new(seed)),
        })
    }
}

/// Independent 64-bit sub-seed number `index` of `master` (SplitMix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_builds_and_is_deterministic() {
        for kind in GrngKind::ALL {
            let cfg = GrngConfig::new(kind);
            let mut a = cfg.build(7).unwrap();
            let mut b = cfg.build(7).unwrap();
            for _ in 0..5000 {
                assert_eq!(a.next_gaussian().to_bits(), b.next_gaussian().to_bits(), "{kind}");
            }
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in GrngKind::ALL {
            assert_eq!(kind.name().parse::<GrngKind>().unwrap(), kind);
        }
        assert!("ziggurat".parse::<GrngKind>().is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn fixed_point_samples_saturate() {
        let mut s = Scripted::new(vec![10.0, 0.5]);
        let v = s.next_fx(FixedSpec::Q8_5);
        assert!(v.saturated());
        assert_eq!(s.next_fx(FixedSpec::Q8_5).raw(), 16);
    }
}
