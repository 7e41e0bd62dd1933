//! Saturating fixed-point arithmetic.
//!
//! A [`FixedSpec`] describes a two's-complement (or unsigned) grid with
//! `frac_bits` fractional bits inside a `total_bits` wide word. Values are
//! held as [`FxVal`], a raw integer tagged with its spec. Every operation
//! rounds to nearest, ties to even, and saturates at the word boundary.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FxpError {
    #[error("invalid fixed-point spec: total_bits={total_bits}, frac_bits={frac_bits} (need 2 <= total <= 32, frac < total)")]
    InvalidSpec { total_bits: u8, frac_bits: u8 },
    #[error("fixed-point spec mismatch: {0} vs {1}")]
    SpecMismatch(FixedSpec, FixedSpec),
    #[error("cannot parse fixed-point spec '{0}' (expected e.g. s8.5 or u8.7)")]
    Parse(String),
}

/// Shape of a fixed-point word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedSpec {
    total_bits: u8,
    frac_bits: u8,
    signed: bool,
}

impl FixedSpec {
    /// Signed Q2.5 in an 8-bit word: range [-4, 3.96875], step 1/32.
    pub const Q8_5: FixedSpec = FixedSpec {
        total_bits: 8,
        frac_bits: 5,
        signed: true,
    };

    pub fn new(total_bits: u8, frac_bits: u8, signed: bool) -> Result<Self, FxpError> {
        if !(2..=32).contains(&total_bits) || frac_bits >= total_bits {
            return Err(FxpError::InvalidSpec {
                total_bits,
                frac_bits,
            });
        }
        Ok(FixedSpec {
            total_bits,
            frac_bits,
            signed,
        })
    }

    pub fn signed(total_bits: u8, frac_bits: u8) -> Result<Self, FxpError> {
        Self::new(total_bits, frac_bits, true)
    }

    pub fn unsigned(total_bits: u8, frac_bits: u8) -> Result<Self, FxpError> {
        Self::new(total_bits, frac_bits, false)
    }

    pub fn total_bits(&self) -> u8 {
        self.total_bits
    }

    pub fn frac_bits(&self) -> u8 {
        self.frac_bits
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn min_raw(&self) -> i64 {
        if self.signed {
            -(1i64 << (self.total_bits - 1))
        } else {
            0
        }
    }

    pub fn max_raw(&self) -> i64 {
        if self.signed {
            (1i64 << (self.total_bits - 1)) - 1
        } else {
            (1i64 << self.total_bits) - 1
        }
    }

    /// Quantization step, exactly `2^-frac_bits`.
    pub fn step(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn min_value(&self) -> f64 {
        self.min_raw() as f64 * self.step()
    }

    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 * self.step()
    }

    pub fn raw_to_real(&self, raw: i64) -> f64 {
        raw as f64 * self.step()
    }

    /// Clamp a raw value into range, reporting whether it was clipped.
    #[inline]
    pub fn saturate(&self, raw: i64) -> (i64, bool) {
        if raw > self.max_raw() {
            (self.max_raw(), true)
        } else if raw < self.min_raw() {
            (self.min_raw(), true)
        } else {
            (raw, false)
        }
    }

    #[inline]
    pub fn clamp_raw(&self, raw: i64) -> i64 {
        raw.clamp(self.min_raw(), self.max_raw())
    }

    /// Round `x` onto this grid (ties to even) and saturate.
    pub fn quantize_raw(&self, x: f64) -> (i64, bool) {
        if x.is_nan() {
            return (0, true);
        }
        let scaled = (x * self.step().recip()).round_ties_even();
        if scaled > self.max_raw() as f64 {
            (self.max_raw(), true)
        } else if scaled < self.min_raw() as f64 {
            (self.min_raw(), true)
        } else {
            (scaled as i64, false)
        }
    }
}

impl fmt::Display for FixedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.signed { "s" } else { "u" };
        write!(f, "{}{}.{}", sign, self.total_bits, self.frac_bits)
    }
}

impl std::str::FromStr for FixedSpec {
    type Err = FxpError;

    /// Parses the `Display` form: `s8.5`, `u16.8`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FxpError::Parse(s.to_string());
        let signed = match s.as_bytes().first() {
            Some(b's') => true,
            Some(b'u') => false,
            _ => return Err(bad()),
        };
        let (total, frac) = s[1..].split_once('.').ok_or_else(bad)?;
        let total = total.parse().map_err(|_| bad())?;
        let frac = frac.parse().map_err(|_| bad())?;
        FixedSpec::new(total, frac, signed)
    }
}

/// A fixed-point value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FxVal {
    raw: i64,
    spec: FixedSpec,
    saturated: bool,
}

impl FxVal {
    /// Builds a value from a raw integer, saturating if it is out of range.
    pub fn from_raw(raw: i64, spec: FixedSpec) -> Self {
        let (raw, saturated) = spec.saturate(raw);
        FxVal {
            raw,
            spec,
            saturated,
        }
    }

    pub fn raw(&self) -> i64 {
        self.raw
    }

    pub fn spec(&self) -> FixedSpec {
        self.spec
    }

    /// True when the operation that produced this value had to clip.
    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn to_f64(&self) -> f64 {
        self.spec.raw_to_real(self.raw)
    }
}

impl fmt::Display for FxVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.to_f64(), self.spec)
    }
}

pub fn quantize(x: f64, spec: FixedSpec) -> FxVal {
    let (raw, saturated) = spec.quantize_raw(x);
    FxVal {
        raw,
        spec,
        saturated,
    }
}

pub fn fx_add(a: FxVal, b: FxVal) -> Result<FxVal, FxpError> {
    if a.spec != b.spec {
        return Err(FxpError::SpecMismatch(a.spec, b.spec));
    }
    Ok(FxVal::from_raw(a.raw + b.raw, a.spec))
}

pub fn fx_mul(a: FxVal, b: FxVal) -> Result<FxVal, FxpError> {
    if a.spec != b.spec {
        return Err(FxpError::SpecMismatch(a.spec, b.spec));
    }
    let wide = a.raw as i128 * b.raw as i128;
    let shifted = round_shift_i128(wide, a.spec.frac_bits as u32);
    let clipped = shifted.clamp(a.spec.min_raw() as i128, a.spec.max_raw() as i128);
    Ok(FxVal {
        raw: clipped as i64,
        spec: a.spec,
        saturated: clipped != shifted,
    })
}

macro_rules! round_shift_impl {
    ($name:ident, $t:ty) => {
        /// Arithmetic right shift with round-to-nearest, ties to even.
        #[inline]
        pub fn $name(v: $t, shift: u32) -> $t {
            if shift == 0 {
                return v;
            }
            let q = v >> shift;
            let rem = v - (q << shift);
            let half: $t = 1 << (shift - 1);
            if rem > half || (rem == half && (q & 1) == 1) {
                q + 1
            } else {
                q
            }
        }
    };
}

round_shift_impl!(round_shift_i64, i64);
round_shift_impl!(round_shift_i128, i128);

/// Moves a raw value from `from` fractional bits to `to` fractional bits.
#[inline]
pub fn rescale_i64(v: i64, from: u32, to: u32) -> i64 {
    if from >= to {
        round_shift_i64(v, from - to)
    } else {
        v << (to - from)
    }
}

#[inline]
pub fn rescale_i128(v: i128, from: u32, to: u32) -> i128 {
    if from >= to {
        round_shift_i128(v, from - to)
    } else {
        v << (to - from)
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn spec_text_round_trip() {
        for text in ["s8.5", "u8.7", "s32.0", "s16.13"] {
            let spec: FixedSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        for bad in ["", "8.5", "s8", "s8.8", "x8.5", "s40.2"] {
            assert!(bad.parse::<FixedSpec>().is_err(), "{bad}");
        }
    }

    use super::*;

    fn q(x: f64) -> FxVal {
        quantize(x, FixedSpec::Q8_5)
    }

    #[test]
    fn spec_validation() {
        assert!(FixedSpec::signed(8, 8).is_err());
        assert!(FixedSpec::signed(1, 0).is_err());
        assert!(FixedSpec::signed(33, 0).is_err());
        assert!(FixedSpec::signed(32, 31).is_ok());
    }

    #[test]
    fn signed_range() {
        let s = FixedSpec::Q8_5;
        assert_eq!(s.min_value(), -4.0);
        assert_eq!(s.max_value(), 4.0 - 1.0 / 32.0);
        assert_eq!(s.step(), 1.0 / 32.0);
        let u = FixedSpec::unsigned(8, 8 - 1).unwrap();
        assert_eq!(u.min_raw(), 0);
        assert_eq!(u.max_raw(), 255);
    }

    #[test]
    fn quantize_examples() {
        for spec in [FixedSpec::Q8_5, FixedSpec::unsigned(4, 2).unwrap()] {
            assert_eq!(quantize(0.0, spec).raw(), 0);
        }
        let v = q(0.69);
        assert_eq!(v.raw(), 22);
        assert_eq!(v.to_f64(), 0.6875);
        assert!(!v.saturated());

        let big = q(100.0);
        assert_eq!(big.raw(), 127);
        assert_eq!(big.to_f64(), 3.96875);
        assert!(big.saturated());
        assert_eq!(q(-100.0).raw(), -128);
        assert!(q(f64::NAN).saturated());
    }

    #[test]
    fn quantize_ties_to_even() {
        // 0.5 / 32 and 1.5 / 32 sit exactly between grid points.
        assert_eq!(q(0.5 / 32.0).raw(), 0);
        assert_eq!(q(1.5 / 32.0).raw(), 2);
        assert_eq!(q(-0.5 / 32.0).raw(), 0);
        assert_eq!(q(-1.5 / 32.0).raw(), -2);
    }

    #[test]
    fn add_and_mul_examples() {
        assert_eq!(fx_add(q(1.0), q(-1.0)).unwrap().raw(), 0);
        assert_eq!(fx_mul(q(0.5), q(0.5)).unwrap().raw(), 8);
        for raw in -128..=127 {
            let x = FxVal::from_raw(raw, FixedSpec::Q8_5);
            assert_eq!(fx_mul(x, q(1.0)).unwrap(), x);
        }
    }

    #[test]
    fn spec_mismatch_is_an_error() {
        let a = q(1.0);
        let b = quantize(1.0, FixedSpec::signed(8, 4).unwrap());
        assert!(matches!(fx_add(a, b), Err(FxpError::SpecMismatch(..))));
        assert!(fx_mul(a, b).is_err());
    }

    #[test]
    fn saturation_exhaustive_8bit() {
        let s = FixedSpec::Q8_5;
        for a in s.min_raw()..=s.max_raw() {
            for b in s.min_raw()..=s.max_raw() {
                let (x, y) = (FxVal::from_raw(a, s), FxVal::from_raw(b, s));
                for r in [fx_add(x, y).unwrap(), fx_mul(x, y).unwrap()] {
                    assert!(r.raw() >= s.min_raw() && r.raw() <= s.max_raw());
                }
            }
        }
    }

    #[test]
    fn round_shift_matches_float_rounding() {
        for v in -1000i64..1000 {
            for shift in 1..6u32 {
                let expect = (v as f64 / (1i64 << shift) as f64).round_ties_even() as i64;
                assert_eq!(round_shift_i64(v, shift), expect, "v={v} shift={shift}");
                assert_eq!(round_shift_i128(v as i128, shift), expect as i128);
            }
        }
    }
}
