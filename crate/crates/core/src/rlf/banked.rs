use std::fmt::Write as _;

use super::{FusedTerm, RlfError, TapConfig};

const TAP_SLOTS: usize = 5;
const SLOTS: usize = TAP_SLOTS + 2;
const HEAD0: usize = 5;
const HEAD1: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Read,
    Write,
}

/// One RAM access made during a cycle. Reads use port 0, writes port 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BankAccess {
    pub kind: AccessKind,
    pub bank: usize,
    pub port: usize,
    pub position: usize,
}

/// Bit-exact model of the banked RLF engine for `m` lanes.
///
/// Logical position `p` of every lane lives in bank `p % 3` at word
/// `p / 3`; bit `l` of a word belongs to lane `l`. The buffer caches the
/// five positions just below the head (offsets `n-5 .. n-1`) together with
/// the two head bits, so each cycle only fetches the two heads and writes
/// back the two oldest taps.
#[derive(Debug, Clone)]
pub struct RlfBankedState {
    n: usize,
    lanes: usize,
    limbs: usize,
    terms: Vec<FusedTerm>,
    banks: [Vec<u64>; 3],
    head: usize,
    buffer: [Vec<u64>; SLOTS],
    tap_reg: Vec<u32>,
    result_reg: Vec<u32>,
    cycle: u64,
    log: Vec<BankAccess>,
}

impl RlfBankedState {
    /// Loads one seed per lane; all-zero seeds are rejected.
    pub fn new(seeds: &[Vec<bool>], taps: &TapConfig) -> Result<Self, RlfError> {
        let n = taps.n();
        if !n.is_multiple_of(3) {
            return Err(RlfError::NotBankable(n));
        }
        let fused = taps.fused();
        if !fused.is_top_window() {
            return Err(RlfError::UnsupportedTapWindow);
        }
        let lanes = seeds.len();
        if lanes == 0 {
            return Err(RlfError::LaneCount(0));
        }
        for (lane, seed) in seeds.iter().enumerate() {
            if seed.len() != n {
                return Err(RlfError::SeedLength {
                    expected: n,
                    got: seed.len(),
                });
            }
            if !seed.iter().any(|&b| b) {
                return Err(RlfError::ZeroSeed(lane));
            }
        }
        let limbs = lanes.div_ceil(64);
        let depth = n / 3;
        let mut banks: [Vec<u64>; 3] = std::array::from_fn(|_| vec![0u64; depth * limbs]);
        for (lane, seed) in seeds.iter().enumerate() {
            for (p, &b) in seed.iter().enumerate() {
                if b {
                    banks[p % 3][(p / 3) * limbs + lane / 64] |= 1 << (lane % 64);
                }
            }
        }
        let mut state = RlfBankedState {
            n,
            lanes,
            limbs,
            terms: fused.terms().to_vec(),
            banks,
            head: 0,
            buffer: std::array::from_fn(|_| vec![0u64; limbs]),
            tap_reg: vec![0; lanes],
            result_reg: seeds
                .iter()
                .map(|s| s.iter().filter(|&&b| b).count() as u32)
                .collect(),
            cycle: 0,
            log: Vec::with_capacity(4),
        };
        for j in 0..TAP_SLOTS {
            let p = n - TAP_SLOTS + j;
            let word = state.word(p).to_vec();
            state.buffer[j].copy_from_slice(&word);
        }
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn head(&self) -> usize {
        self.head
    }

    /// Indexer registers `(block, pos)` addressing the head.
    pub fn indexer(&self) -> (usize, usize) {
        (self.head % 3, self.head / 3)
    }

    pub fn result_reg(&self) -> &[u32] {
        &self.result_reg
    }

    pub fn tap_reg(&self) -> &[u32] {
        &self.tap_reg
    }

    /// Accesses issued by the most recent cycle.
    pub fn access_log(&self) -> &[BankAccess] {
        &self.log
    }

    #[inline]
    fn word(&self, p: usize) -> &[u64] {
        let off = (p / 3) * self.limbs;
        &self.banks[p % 3][off..off + self.limbs]
    }

    fn read_into(&mut self, p: usize, slot: usize) {
        let off = (p / 3) * self.limbs;
        let bank = p % 3;
        self.buffer[slot].copy_from_slice(&self.banks[bank][off..off + self.limbs]);
        self.log.push(BankAccess {
            kind: AccessKind::Read,
            bank,
            port: 0,
            position: p,
        });
    }

    fn write_from(&mut self, slot: usize, p: usize) {
        let off = (p / 3) * self.limbs;
        let bank = p % 3;
        self.banks[bank][off..off + self.limbs].copy_from_slice(&self.buffer[slot]);
        self.log.push(BankAccess {
            kind: AccessKind::Write,
            bank,
            port: 1,
            position: p,
        });
    }

    fn check_ports(&self) -> Result<(), RlfError> {
        for (i, a) in self.log.iter().enumerate() {
            for b in &self.log[i + 1..] {
                if a.bank == b.bank && a.port == b.port {
                    return Err(RlfError::PortConflict {
                        bank: a.bank,
                        cycle: self.cycle,
                    });
                }
            }
        }
        Ok(())
    }

    fn tap_counts(&self, out: &mut [u32]) {
        for (lane, c) in out.iter_mut().enumerate() {
            let (limb, bit) = (lane / 64, lane % 64);
            *c = (0..TAP_SLOTS)
                .map(|j| (self.buffer[j][limb] >> bit & 1) as u32)
                .sum();
        }
    }

    /// Advances every lane by one fused update.
    pub fn step(&mut self) -> Result<(), RlfError> {
        let n = self.n;
        let h = self.head;
        self.log.clear();
        self.read_into(h, HEAD0);
        self.read_into((h + 1) % n, HEAD1);

        let mut pre = std::mem::take(&mut self.tap_reg);
        self.tap_counts(&mut pre);

        for term in &self.terms {
            let j = term.offset + TAP_SLOTS - n;
            for limb in 0..self.limbs {
                let mut v = 0;
                if term.from_head0 {
                    v ^= self.buffer[HEAD0][limb];
                }
                if term.from_head1 {
                    v ^= self.buffer[HEAD1][limb];
                }
                self.buffer[j][limb] ^= v;
            }
        }

        let mut post = vec![0u32; self.lanes];
        self.tap_counts(&mut post);
        for ((r, &a), &b) in self.result_reg.iter_mut().zip(&post).zip(&pre) {
            *r = *r + a - b;
        }
        self.tap_reg = post;

        self.write_from(0, (h + n - 5) % n);
        self.write_from(1, (h + n - 4) % n);
        self.check_ports()?;

        // Taps move down by two and the old heads become the top taps;
        // slots 5, 6 are refilled by the next fetch.
        self.buffer.rotate_left(2);

        self.head = (h + 2) % n;
        self.cycle += 1;
        Ok(())
    }

    /// Logical seed vector of one lane (RAM overlaid with the tap buffer).
    pub fn lane_bits(&self, lane: usize) -> Vec<bool> {
        let (limb, bit) = (lane / 64, lane % 64);
        let mut bits: Vec<bool> = (0..self.n)
            .map(|p| self.word(p)[limb] >> bit & 1 == 1)
            .collect();
        for j in 0..TAP_SLOTS {
            let p = (self.head + self.n - TAP_SLOTS + j) % self.n;
            bits[p] = self.buffer[j][limb] >> bit & 1 == 1;
        }
        bits
    }

    /// Hex dump of indexer, registers, buffer and banks.
    pub fn dump_state(&self) -> String {
        let mut s = String::new();
        let (block, pos) = self.indexer();
        let _ = writeln!(
            s,
            "n={} lanes={} cycle={} head={} block={} pos={}",
            self.n, self.lanes, self.cycle, self.head, block, pos
        );
        let hex = |limbs: &[u64]| {
            limbs
                .iter()
                .rev()
                .map(|l| format!("{l:016x}"))
                .collect::<Vec<_>>()
                .join("")
        };
        for (j, slot) in self.buffer.iter().enumerate() {
            let _ = writeln!(s, "buffer[{j}] {}", hex(slot));
        }
        let _ = writeln!(s, "tap_reg {:?}", self.tap_reg);
        let _ = writeln!(s, "result_reg {:?}", self.result_reg);
        for (b, bank) in self.banks.iter().enumerate() {
            for (w, chunk) in bank.chunks(self.limbs).enumerate() {
                let _ = writeln!(s, "bank{b}[{w:02x}] {}", hex(chunk));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rlf::SeedVector;

    fn seed(pattern: u64) -> Vec<bool> {
        (0..255).map(|i| (pattern.rotate_left(i as u32 % 64) >> (i % 7)) & 1 == 1).collect()
    }

    #[test]
    fn initial_result_is_popcount() {
        let s = seed(0xdead_beef_1234_5678);
        let e = RlfBankedState::new(std::slice::from_ref(&s), &TapConfig::n255()).unwrap();
        assert_eq!(e.result_reg()[0] as usize, s.iter().filter(|&&b| b).count());
        assert_eq!(e.lane_bits(0), s);
    }

    #[test]
    fn all_ones_first_step() {
        let mut e = RlfBankedState::new(&[vec![true; 255]], &TapConfig::n255()).unwrap();
        e.step().unwrap();
        // Both heads are 1: four taps clear, offset 253 sees 1 ^ 1 and stays.
        let new_taps = 1;
        assert_eq!(e.result_reg()[0], 255 + new_taps - 5);
    }

    #[test]
    fn one_cycle_access_pattern() {
        let mut e = RlfBankedState::new(&[seed(7)], &TapConfig::n255()).unwrap();
        for _ in 0..300 {
            e.step().unwrap();
            let log = e.access_log();
            assert_eq!(log.iter().filter(|a| a.kind == AccessKind::Read).count(), 2);
            assert_eq!(log.iter().filter(|a| a.kind == AccessKind::Write).count(), 2);
            for b in 0..3 {
                assert!(log.iter().filter(|a| a.bank == b).count() <= 2);
            }
        }
    }

    #[test]
    fn indexer_tracks_head() {
        let mut e = RlfBankedState::new(&[seed(3)], &TapConfig::n255()).unwrap();
        for _ in 0..5 {
            e.step().unwrap();
        }
        assert_eq!(e.head(), 10);
        assert_eq!(e.indexer(), (1, 3));
    }

    #[test]
    fn matches_flat_for_a_few_thousand_steps() {
        let seeds: Vec<Vec<bool>> = (1..=70u64).map(|k| seed(k.wrapping_mul(0x9e37_79b9_7f4a_7c15))).collect();
        let mut e = RlfBankedState::new(&seeds, &TapConfig::n255()).unwrap();
        let mut flat: Vec<SeedVector> = seeds
            .iter()
            .map(|s| SeedVector::new(s, &TapConfig::n255()).unwrap())
            .collect();
        for _ in 0..3000 {
            e.step().unwrap();
            for (lane, f) in flat.iter_mut().enumerate() {
                f.step();
                assert_eq!(e.result_reg()[lane], f.popcount());
            }
        }
        for (lane, f) in flat.iter().enumerate() {
            assert_eq!(e.lane_bits(lane), f.bits());
        }
    }

    #[test]
    fn rejects_zero_lane_and_bad_n() {
        let err = RlfBankedState::new(&[seed(1), vec![false; 255]], &TapConfig::n255());
        assert_eq!(err.unwrap_err(), RlfError::ZeroSeed(1));
        let t = TapConfig::new(16, vec![11, 13, 14]).unwrap();
        assert!(RlfBankedState::new(&[vec![true; 16]], &t).is_err());
    }

    #[test]
    fn dump_mentions_every_bank_word() {
        let e = RlfBankedState::new(&[seed(9)], &TapConfig::n255()).unwrap();
        let dump = e.dump_state();
        assert_eq!(dump.lines().filter(|l| l.starts_with("bank")).count(), 255);
    }
}
