use rand::RngCore;

use super::parallel::lane_seeds;
use super::{FusedTerm, TapConfig};

/// Uniform bits from 64 RLF lanes run side by side.
///
/// Memory word `i` holds bit `i` of all 64 lanes, so one fused update
/// costs five word XORs and yields the two head words `x(h)`, `x(h+1)`:
/// 128 fresh bits, one from each lane per head.
#[derive(Debug, Clone)]
pub struct LfsrUniform {
    mem: Vec<u64>,
    head: usize,
    terms: Vec<FusedTerm>,
    spare: Option<u64>,
}

impl LfsrUniform {
    pub fn new(seed: u64) -> Self {
        let taps = TapConfig::n255();
        let n = taps.n();
        let mut mem = vec![0u64; n];
        for (lane, bits) in lane_seeds(seed ^ 0x005e_ed0f_u64, 64, n).iter().enumerate() {
            for (i, &b) in bits.iter().enumerate() {
                if b {
                    mem[i] |= 1 << lane;
                }
            }
        }
        let mut u = LfsrUniform {
            mem,
            head: 0,
            terms: taps.fused().terms().to_vec(),
            spare: None,
        };
        // Move away from the raw seed words before the first output.
        for _ in 0..n {
            u.cycle();
        }
        u.spare = None;
        u
    }

    fn cycle(&mut self) -> (u64, u64) {
        let n = self.mem.len();
        let h0 = self.mem[self.head];
        let h1 = self.mem[(self.head + 1) % n];
        for t in &self.terms {
            let mut v = 0;
            if t.from_head0 {
                v ^= h0;
            }
            if t.from_head1 {
                v ^= h1;
            }
            self.mem[(self.head + t.offset) % n] ^= v;
        }
        self.head = (self.head + 2) % n;
        (h0, h1)
    }
}

impl RngCore for LfsrUniform {
    fn next_u32(&mut self) -> u32 {
        self.next_u64() as u32
    }

    fn next_u64(&mut self) -> u64 {
        if let Some(w) = self.spare.take() {
            return w;
        }
        let (a, b) = self.cycle();
        self.spare = Some(b);
        a
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}
