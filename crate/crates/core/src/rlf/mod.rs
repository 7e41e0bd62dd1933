//! RAM-based linear feedback Gaussian generator.
//!
//! The generator approximates `N(n/2, n/4)` by the popcount of an `n`-bit
//! LFSR state. Instead of shifting, the state sits in fixed memory and a
//! moving head index emulates the shift: for every tap `t`,
//! `x(h + t) ^= x(h)` followed by `h += 1`. Two consecutive updates are
//! fused into one five-tap update with `h += 2`.
//!
//! * [`SeedVector`] is the flat reference implementation.
//! * [`RlfBankedState`] stores the seeds in three RAM banks, caches the taps
//!   in a 7-slot buffer and updates the popcount from the tap difference,
//!   for any number of lanes packed into the RAM word.
//! * [`RlfArray`] adds the rotating group-of-4 output selector.

mod banked;
mod flat;
mod parallel;
mod uniform;

pub use banked::{AccessKind, BankAccess, RlfBankedState};
pub use flat::SeedVector;
pub use parallel::{rotation_lane, RlfArray, RlfGrng};
pub use uniform::LfsrUniform;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RlfError {
    #[error("no known 3-tap feedback for a {0}-bit seed")]
    UnknownLength(usize),
    #[error("invalid tap {tap} for a {n}-bit register")]
    InvalidTap { n: usize, tap: usize },
    #[error("banked storage needs a seed length divisible by 3, got {0}")]
    NotBankable(usize),
    #[error("banked engine expects the fused taps to fill offsets n-5..n-1")]
    UnsupportedTapWindow,
    #[error("lane count {0} is not a positive multiple of 4")]
    LaneCount(usize),
    #[error("seed for lane {0} is all zero")]
    ZeroSeed(usize),
    #[error("seed has {got} bits, expected {expected}")]
    SeedLength { expected: usize, got: usize },
    #[error("sum {sum} outside [0, {n}]")]
    SumOutOfRange { sum: u32, n: usize },
    #[error("bank port conflict on bank {bank} in cycle {cycle}")]
    PortConflict { bank: usize, cycle: u64 },
}

/// Seed lengths with a verified maximal-length 3-tap feedback.
///
/// Taps are 1-based register indices with register 1 as the head.
const TAP_TABLE: &[(usize, [usize; 3])] = &[(15, [10, 12, 13]), (255, [250, 252, 253])];

/// Length and taps of a linear feedback function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TapConfig {
    n: usize,
    taps: Vec<usize>,
}

impl TapConfig {
    pub fn n255() -> Self {
        Self::from_table(255).expect("255 is in the tap table")
    }

    pub fn from_table(n: usize) -> Result<Self, RlfError> {
        TAP_TABLE
            .iter()
            .find(|(len, _)| *len == n)
            .map(|(len, taps)| TapConfig {
                n: *len,
                taps: taps.to_vec(),
            })
            .ok_or(RlfError::UnknownLength(n))
    }

    /// Arbitrary feedback; no claim of maximal period is made.
    pub fn new(n: usize, taps: Vec<usize>) -> Result<Self, RlfError> {
        for &tap in &taps {
            if tap == 0 || tap >= n {
                return Err(RlfError::InvalidTap { n, tap });
            }
        }
        Ok(TapConfig { n, taps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn taps(&self) -> &[usize] {
        &self.taps
    }

    /// Two single updates fused into one, expressed on pre-update values.
    pub fn fused(&self) -> FusedUpdate {
        FusedUpdate::derive(self)
    }
}

/// One target of the fused update: `x(h + offset) ^= [x(h)] ^ [x(h+1)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FusedTerm {
    pub offset: usize,
    pub from_head0: bool,
    pub from_head1: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FusedUpdate {
    n: usize,
    terms: Vec<FusedTerm>,
}

impl FusedUpdate {
    fn derive(cfg: &TapConfig) -> Self {
        let n = cfg.n;
        // Symbolic contribution of (x(h), x(h+1)) to each offset.
        let mut coef = vec![(false, false); n];
        coef[0].0 = true;
        coef[1 % n].1 = true;
        let mut delta = vec![(false, false); n];
        // First update, head at h.
        for &t in &cfg.taps {
            delta[t % n].0 ^= true;
        }
        // Second update, head at h + 1; its head value includes the first
        // update if offset 1 was itself a tap.
        let head1 = (coef[1 % n].0 ^ delta[1 % n].0, coef[1 % n].1 ^ delta[1 % n].1);
        for &t in &cfg.taps {
            let o = (1 + t) % n;
            delta[o].0 ^= head1.0;
            delta[o].1 ^= head1.1;
        }
        let terms = delta
            .iter()
            .enumerate()
            .filter(|(_, d)| d.0 || d.1)
            .map(|(offset, d)| FusedTerm {
                offset,
                from_head0: d.0,
                from_head1: d.1,
            })
            .collect();
        FusedUpdate { n, terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[FusedTerm] {
        &self.terms
    }

    /// True when the targets are exactly offsets `n-5 ..= n-1`.
    pub fn is_top_window(&self) -> bool {
        self.terms.len() == 5
            && self
                .terms
                .iter()
                .enumerate()
                .all(|(j, t)| t.offset == self.n - 5 + j)
    }
}

/// One plain LFSR step on registers `R(1..=n)` (index 0 holds `R(1)`).
///
/// Every register takes its right neighbour's value (the head wraps to
/// `R(n)`), and tap registers additionally XOR in the old head.
pub fn lfsr_step(state: &[bool], taps: &[usize]) -> Vec<bool> {
    let n = state.len();
    let head = state[0];
    let mut next: Vec<bool> = (0..n).map(|i| state[(i + 1) % n]).collect();
    for &t in taps {
        next[t - 1] ^= head;
    }
    next
}

/// Maps an `n`-bit popcount onto the unit normal.
pub fn standardize(sum: u32, n: usize) -> Result<f64, RlfError> {
    if sum as usize > n {
        return Err(RlfError::SumOutOfRange { sum, n });
    }
    if n <= 18 {
        log::warn!("binomial-to-normal approximation needs n > 18 for p = 0.5, got n = {n}");
    }
    let mean = n as f64 / 2.0;
    let sd = (n as f64 / 4.0).sqrt();
    Ok((sum as f64 - mean) / sd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fused_update_for_255_matches_five_rules() {
        let fused = TapConfig::n255().fused();
        let expect = [
            (250, true, false),
            (251, false, true),
            (252, true, false),
            (253, true, true),
            (254, false, true),
        ];
        let got: Vec<_> = fused
            .terms()
            .iter()
            .map(|t| (t.offset, t.from_head0, t.from_head1))
            .collect();
        assert_eq!(got, expect);
        assert!(fused.is_top_window());
        assert!(TapConfig::from_table(15).unwrap().fused().is_top_window());
    }

    #[test]
    fn unknown_length_rejected() {
        assert_eq!(TapConfig::from_table(63), Err(RlfError::UnknownLength(63)));
        assert!(TapConfig::new(8, vec![8]).is_err());
    }

    #[test]
    fn lfsr_zero_state_is_absorbing() {
        let zero = vec![false; 8];
        assert_eq!(lfsr_step(&zero, &[4, 5, 6]), zero);
    }

    #[test]
    fn lfsr_single_step_trace() {
        // R(1) = 1: shifts into R(8); taps 4, 5, 6 pick up the head.
        let mut s = vec![false; 8];
        s[0] = true;
        let next = lfsr_step(&s, &[4, 5, 6]);
        let set: Vec<usize> = (0..8).filter(|&i| next[i]).map(|i| i + 1).collect();
        assert_eq!(set, vec![4, 5, 6, 8]);
    }

    #[test]
    fn lfsr_8bit_period_is_255() {
        // Brute force over all 255 nonzero seeds.
        for seed in 1u32..256 {
            let start: Vec<bool> = (0..8).map(|i| seed >> i & 1 == 1).collect();
            let mut s = start.clone();
            let mut period = 0;
            loop {
                s = lfsr_step(&s, &[4, 5, 6]);
                period += 1;
                if s == start {
                    break;
                }
                assert!(period < 300);
            }
            assert_eq!(period, 255, "seed {seed}");
        }
    }

    #[test]
    fn standardize_examples() {
        assert_eq!(standardize(128, 256).unwrap(), 0.0);
        assert!((standardize(127, 255).unwrap() - (-0.062622)).abs() < 1e-5);
        assert!((standardize(255, 255).unwrap() - 15.968719).abs() < 1e-5);
        assert!(standardize(256, 255).is_err());
    }
}
