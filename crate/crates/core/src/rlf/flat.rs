use super::{FusedUpdate, RlfError, TapConfig};

/// Flat RLF reference: the whole seed in one bit vector plus a head index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedVector {
    words: Vec<u64>,
    n: usize,
    head: usize,
    update: FusedUpdate,
}

impl SeedVector {
    pub fn new(bits: &[bool], taps: &TapConfig) -> Result<Self, RlfError> {
        let n = taps.n();
        if bits.len() != n {
            return Err(RlfError::SeedLength {
                expected: n,
                got: bits.len(),
            });
        }
        let mut words = vec![0u64; n.div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        Ok(SeedVector {
            words,
            n,
            head: 0,
            update: taps.fused(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn head(&self) -> usize {
        self.head
    }

    /// Bit at absolute memory position `i`.
    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.n).map(|i| self.bit(i)).collect()
    }

    pub fn popcount(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// One fused update: every target reads pre-update head values.
    pub fn step(&mut self) {
        let h0 = self.bit(self.head);
        let h1 = self.bit((self.head + 1) % self.n);
        for k in 0..self.update.terms().len() {
            let term = self.update.terms()[k];
            let v = (term.from_head0 & h0) ^ (term.from_head1 & h1);
            if v {
                self.flip((self.head + term.offset) % self.n);
            }
        }
        self.head = (self.head + 2) % self.n;
    }
}
