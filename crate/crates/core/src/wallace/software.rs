use rand::seq::SliceRandom;
use rand::RngCore;

use super::{hadamard4, hadamard4_fixed, init_pool, RingMode, WallaceError, WallacePool};
use crate::fxp::FixedSpec;
use crate::rlf::LfsrUniform;

/// Reference Wallace generator with random quadruple addressing.
///
/// Each call to [`step`](Self::step) runs `loops` passes over the pool. A
/// pass draws a fresh random permutation, transforms consecutive
/// quadruples of it and writes the results back to the same addresses.
/// The pool after the final pass is the output block.
#[derive(Debug, Clone)]
pub struct SoftwareWallace<R = LfsrUniform> {
    pool: WallacePool,
    loops: usize,
    rng: R,
    perm: Vec<usize>,
    pos: usize,
}

impl SoftwareWallace<LfsrUniform> {
    /// Pool from CDF inversion, addressing driven by the RLF uniform source.
    pub fn new(pool_size: usize, loops: usize, seed: u64) -> Result<Self, WallaceError> {
        let pool = init_pool(pool_size, seed)?;
        Self::with_rng(pool, loops, LfsrUniform::new(seed))
    }
}

impl<R: RngCore> SoftwareWallace<R> {
    pub fn with_rng(pool: WallacePool, loops: usize, rng: R) -> Result<Self, WallaceError> {
        if loops == 0 {
            return Err(WallaceError::Loops);
        }
        let k = pool.len();
        Ok(SoftwareWallace {
            pool,
            loops,
            rng,
            perm: (0..k).collect(),
            pos: k,
        })
    }

    pub fn pool(&self) -> &WallacePool {
        &self.pool
    }

    /// Runs one pass with the given address order.
    pub fn pass_with(&mut self, order: &[usize]) {
        let values = self.pool.values_mut();
        for q in order.chunks_exact(4) {
            let y = hadamard4([values[q[0]], values[q[1]], values[q[2]], values[q[3]]]);
            for (&i, v) in q.iter().zip(y) {
                values[i] = v;
            }
        }
    }

    pub fn step(&mut self) {
        let mut perm = std::mem::take(&mut self.perm);
        for _ in 0..self.loops {
            perm.shuffle(&mut self.rng);
            self.pass_with(&perm);
        }
        self.perm = perm;
        self.pos = 0;
    }

    pub fn next_value(&mut self) -> f64 {
        if self.pos == self.pool.len() {
            self.step();
        }
        let v = self.pool.values()[self.pos];
        self.pos += 1;
        v
    }
}

/// Single-unit Wallace without sharing, shifting or multiple loops.
///
/// Quadruples are fetched in address order, transformed once and written
/// back in place; each transformed quadruple is emitted. By default the
/// pool runs on the 8-bit fixed-point datapath, like the hardware unit.
#[derive(Debug, Clone)]
pub struct WallaceNss {
    pool: WallacePool,
    raw: Vec<i64>,
    mode: RingMode,
    cursor: usize,
    out: [f64; 4],
    pos: usize,
}

impl WallaceNss {
    pub const DEFAULT_POOL: usize = 256;
    pub const DEFAULT_MODE: RingMode = RingMode::Fixed(FixedSpec::Q8_5);

    pub fn new(pool_size: usize, seed: u64) -> Result<Self, WallaceError> {
        Ok(Self::from_pool(init_pool(pool_size, seed)?, Self::DEFAULT_MODE))
    }

    pub fn with_mode(pool_size: usize, seed: u64, mode: RingMode) -> Result<Self, WallaceError> {
        Ok(Self::from_pool(init_pool(pool_size, seed)?, mode))
    }

    pub fn from_pool(pool: WallacePool, mode: RingMode) -> Self {
        let raw = match mode {
            RingMode::Real => Vec::new(),
            RingMode::Fixed(spec) => pool.values().iter().map(|&x| spec.quantize_raw(x).0).collect(),
        };
        WallaceNss {
            pool,
            raw,
            mode,
            cursor: 0,
            out: [0.0; 4],
            pos: 4,
        }
    }

    /// Current pool contents as real numbers.
    pub fn values(&self) -> Vec<f64> {
        match self.mode {
            RingMode::Real => self.pool.values().to_vec(),
            RingMode::Fixed(spec) => self.raw.iter().map(|&r| spec.raw_to_real(r)).collect(),
        }
    }

    /// Transforms the quadruple at the cursor and returns it.
    pub fn step(&mut self) -> [f64; 4] {
        let c = self.cursor;
        let y = match self.mode {
            RingMode::Real => {
                let v = self.pool.values_mut();
                let y = hadamard4([v[c], v[c + 1], v[c + 2], v[c + 3]]);
                v[c..c + 4].copy_from_slice(&y);
                y
            }
            RingMode::Fixed(spec) => {
                let r = &mut self.raw;
                let (y, _) = hadamard4_fixed([r[c], r[c + 1], r[c + 2], r[c + 3]], spec);
                r[c..c + 4].copy_from_slice(&y);
                y.map(|v| spec.raw_to_real(v))
            }
        };
        self.cursor = (c + 4) % self.pool.len();
        y
    }

    pub fn next_value(&mut self) -> f64 {
        if self.pos == 4 {
            self.out = self.step();
            self.pos = 0;
        }
        let v = self.out[self.pos];
        self.pos += 1;
        v
    }
}
