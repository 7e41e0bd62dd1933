use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{standardize, RlfBankedState, RlfError, TapConfig};

/// Lane routed to output slot `slot` of a group of four at cycle `cycle`.
#[inline]
pub fn rotation_lane(slot: usize, cycle: u64) -> usize {
    (slot + (cycle % 4) as usize) % 4
}

/// `m` lanes sharing one indexer, read out through rotating 4-way selectors.
#[derive(Debug, Clone)]
pub struct RlfArray {
    engine: RlfBankedState,
}

impl RlfArray {
    pub fn new(seeds: &[Vec<bool>], taps: &TapConfig) -> Result<Self, RlfError> {
        if seeds.is_empty() || !seeds.len().is_multiple_of(4) {
            return Err(RlfError::LaneCount(seeds.len()));
        }
        Ok(RlfArray {
            engine: RlfBankedState::new(seeds, taps)?,
        })
    }

    /// Seeds `lanes` lanes from a 64-bit seed. Lane `l` uses ChaCha stream
    /// `l`, and an all-zero draw is redrawn from the same stream.
    pub fn from_seed(seed: u64, lanes: usize, taps: &TapConfig) -> Result<Self, RlfError> {
        Self::new(&lane_seeds(seed, lanes, taps.n()), taps)
    }

    pub fn lanes(&self) -> usize {
        self.engine.lanes()
    }

    pub fn engine(&self) -> &RlfBankedState {
        &self.engine
    }

    /// Runs one cycle and writes the selected raw sums into `out`.
    pub fn step_into(&mut self, out: &mut [u32]) -> Result<(), RlfError> {
        let c = self.engine.cycle();
        self.engine.step()?;
        let sums = self.engine.result_reg();
        for (g, group) in out.chunks_exact_mut(4).enumerate() {
            for (j, o) in group.iter_mut().enumerate() {
                *o = sums[g * 4 + rotation_lane(j, c)];
            }
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<Vec<u32>, RlfError> {
        let mut out = vec![0; self.lanes()];
        self.step_into(&mut out)?;
        Ok(out)
    }
}

pub(crate) fn lane_seeds(seed: u64, lanes: usize, n: usize) -> Vec<Vec<bool>> {
    (0..lanes)
        .map(|lane| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(lane as u64);
            loop {
                let mut bits = Vec::with_capacity(n);
                while bits.len() < n {
                    let w = rng.next_u64();
                    bits.extend((0..64).map(|i| w >> i & 1 == 1).take(n - bits.len()));
                }
                if bits.iter().any(|&b| b) {
                    break bits;
                }
            }
        })
        .collect()
}

/// Stream of RLF samples: raw sums or standardized values, slot-interleaved.
#[derive(Debug, Clone)]
pub struct RlfGrng {
    array: RlfArray,
    buf: Vec<u32>,
    pos: usize,
}

impl RlfGrng {
    pub const DEFAULT_LANES: usize = 64;

    pub fn new(seed: u64) -> Self {
        Self::with_lanes(seed, Self::DEFAULT_LANES).expect("64 lanes with n = 255 is valid")
    }

    pub fn with_lanes(seed: u64, lanes: usize) -> Result<Self, RlfError> {
        let array = RlfArray::from_seed(seed, lanes, &TapConfig::n255())?;
        Ok(RlfGrng {
            buf: vec![0; lanes],
            pos: lanes,
            array,
        })
    }

    pub fn array(&self) -> &RlfArray {
        &self.array
    }

    pub fn next_sum(&mut self) -> u32 {
        if self.pos == self.buf.len() {
            self.array
                .step_into(&mut self.buf)
                .expect("derived access schedule never conflicts");
            self.pos = 0;
        }
        let v = self.buf[self.pos];
        self.pos += 1;
        v
    }

    pub fn next_standard(&mut self) -> f64 {
        let n = self.array.engine().n();
        standardize(self.next_sum(), n).expect("sum never exceeds n")
    }
}
