use super::{hadamard4, hadamard4_fixed, init_pool, WallaceError};
use rand::Rng;

use crate::fxp::FixedSpec;
use crate::rlf::LfsrUniform;

/// Arithmetic used inside the ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingMode {
    Real,
    Fixed(FixedSpec),
}

/// Ring of small Wallace units that behave as one large pool.
///
/// Cycle `c` belongs to sweep `s = c div K/4` and frame `k = c mod K/4`.
/// Every unit fetches the four positions `A_s(4k + j)`, where `A_s` is an
/// affine address scramble `p -> (a_s p + b_s) mod K` with odd `a_s`, so
/// each sweep visits every position once but groups them differently.
/// `a_s` and `b_s` are drawn from an RLF uniform source at the start of
/// every sweep.
/// The transformed quadruple is emitted in the same cycle and written into
/// unit `(i+1) mod U` at the same frame shifted by one element: output `j`
/// lands on `A_s(4k + (j+1) mod 4)`. All reads of a cycle happen before its
/// writes, so a unit never reads what was written in the same cycle, and
/// in real arithmetic the total energy of the ring is conserved.
#[derive(Debug, Clone)]
pub struct WallaceRing {
    units: usize,
    pool: usize,
    mode: RingMode,
    real: Vec<f64>,
    raw: Vec<i64>,
    cycle: u64,
    addr: LfsrUniform,
    scramble: (usize, usize),
    out: Vec<f64>,
    pos: usize,
    saturations: u64,
}

impl WallaceRing {
    pub const DEFAULT_UNITS: usize = 8;
    pub const DEFAULT_POOL: usize = 256;

    pub fn new(units: usize, pool: usize, seed: u64, mode: RingMode) -> Result<Self, WallaceError> {
        if units == 0 {
            return Err(WallaceError::NoUnits);
        }
        if pool == 0 || !pool.is_multiple_of(4) {
            return Err(WallaceError::PoolSize(pool));
        }
        let mut real = Vec::with_capacity(units * pool);
        for u in 0..units {
            let sub = seed.wrapping_add((u as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            real.extend_from_slice(init_pool(pool, sub)?.values());
        }
        let mut saturations = 0;
        let raw = match mode {
            RingMode::Real => Vec::new(),
            RingMode::Fixed(spec) => real
                .iter()
                .map(|&x| {
                    let (r, s) = spec.quantize_raw(x);
                    saturations += s as u64;
                    r
                })
                .collect(),
        };
        if let RingMode::Fixed(_) = mode {
            real.clear();
        }
        let mut addr = LfsrUniform::new(seed);
        let scramble = draw_scramble(&mut addr, pool);
        Ok(WallaceRing {
            units,
            pool,
            mode,
            real,
            raw,
            cycle: 0,
            addr,
            scramble,
            out: vec![0.0; 4 * units],
            pos: 4 * units,
            saturations,
        })
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn pool_size(&self) -> usize {
        self.pool
    }

    /// Numbers held across all units.
    pub fn total_size(&self) -> usize {
        match self.mode {
            RingMode::Real => self.real.len(),
            RingMode::Fixed(_) => self.raw.len(),
        }
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn mode(&self) -> RingMode {
        self.mode
    }

    /// Outputs that hit the saturation bound, including initialization.
    pub fn saturations(&self) -> u64 {
        self.saturations
    }

    /// Unit that receives the outputs of unit `i`.
    #[inline]
    pub fn write_target(&self, i: usize) -> usize {
        (i + 1) % self.units
    }

    /// Multiplier and offset of the current sweep's address scramble.
    pub fn scramble(&self) -> (usize, usize) {
        self.scramble
    }

    /// Fetch frame of every unit in the next cycle.
    pub fn read_frame(&self) -> [usize; 4] {
        let k = (self.cycle % (self.pool / 4) as u64) as usize;
        let (a, b) = self.scramble;
        std::array::from_fn(|j| (a * (4 * k + j) + b) % self.pool)
    }

    /// Positions in the target pool that receive outputs `0..4` next cycle.
    pub fn write_positions(&self) -> [usize; 4] {
        let f = self.read_frame();
        [f[1], f[2], f[3], f[0]]
    }

    pub fn values(&self) -> Vec<f64> {
        match self.mode {
            RingMode::Real => self.real.clone(),
            RingMode::Fixed(spec) => self.raw.iter().map(|&r| spec.raw_to_real(r)).collect(),
        }
    }

    pub fn energy(&self) -> f64 {
        match self.mode {
            RingMode::Real => self.real.iter().map(|v| v * v).sum(),
            RingMode::Fixed(spec) => {
                let s = spec.step();
                self.raw.iter().map(|&r| (r * r) as f64).sum::<f64>() * s * s
            }
        }
    }

    /// One ring cycle; returns the `4U` outputs, unit 0 first.
    pub fn step(&mut self) -> &[f64] {
        let frame = self.read_frame();
        let dst_pos = self.write_positions();
        match self.mode {
            RingMode::Real => {
                let mut ys = vec![[0.0; 4]; self.units];
                for (i, y) in ys.iter_mut().enumerate() {
                    let base = i * self.pool;
                    *y = hadamard4(frame.map(|p| self.real[base + p]));
                }
                for (i, y) in ys.iter().enumerate() {
                    let dst = self.write_target(i) * self.pool;
                    for (p, v) in dst_pos.iter().zip(y) {
                        self.real[dst + p] = *v;
                    }
                    self.out[4 * i..4 * i + 4].copy_from_slice(y);
                }
            }
            RingMode::Fixed(spec) => {
                let mut ys = vec![[0i64; 4]; self.units];
                for (i, y) in ys.iter_mut().enumerate() {
                    let base = i * self.pool;
                    let (v, sat) = hadamard4_fixed(frame.map(|p| self.raw[base + p]), spec);
                    self.saturations += sat as u64;
                    *y = v;
                }
                for (i, y) in ys.iter().enumerate() {
                    let dst = self.write_target(i) * self.pool;
                    for (p, v) in dst_pos.iter().zip(y) {
                        self.raw[dst + p] = *v;
                    }
                    for (o, &v) in self.out[4 * i..4 * i + 4].iter_mut().zip(y) {
                        *o = spec.raw_to_real(v);
                    }
                }
            }
        }
        self.cycle += 1;
        if self.cycle.is_multiple_of((self.pool / 4) as u64) {
            self.scramble = draw_scramble(&mut self.addr, self.pool);
        }
        &self.out
    }

    pub fn next_value(&mut self) -> f64 {
        if self.pos == self.out.len() {
            self.step();
            self.pos = 0;
        }
        let v = self.out[self.pos];
        self.pos += 1;
        v
    }
}

fn draw_scramble(rng: &mut LfsrUniform, pool: usize) -> (usize, usize) {
    (2 * rng.random_range(0..pool / 2) + 1, rng.random_range(0..pool))
}
