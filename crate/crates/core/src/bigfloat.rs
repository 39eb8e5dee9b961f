//! High-precision fixed-point reals with conservative error tracking.
//!
//! A [`BigFixed`] is `mant * 2^(-prec)`. Additions are exact after
//! alignment; products and quotients truncate back to the larger operand
//! precision, so a single operation loses at most one ulp. [`NumericValue`]
//! wraps a `BigFixed` with a propagated absolute error bound; the bound is
//! an engineering bound (tail estimates plus ulp counting), not certified
//! interval arithmetic.

use crate::rational::Q;
use crate::series::Coeff;
use num_bigint::{BigInt, Sign};
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};

/// Working precision used when converting exact rationals into numeric
/// coefficients (series arithmetic has no other way to learn the precision).
static WORKING_PREC: AtomicU32 = AtomicU32::new(192);

pub fn set_working_precision(bits: u32) {
    WORKING_PREC.store(bits, AtomicOrdering::SeqCst);
}

pub fn working_precision() -> u32 {
    WORKING_PREC.load(AtomicOrdering::SeqCst)
}

/// `mant * 2^(-prec)`; integers live at `prec = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigFixed {
    pub mant: BigInt,
    pub prec: u32,
}

impl BigFixed {
    pub fn zero() -> Self {
        BigFixed {
            mant: BigInt::zero(),
            prec: 0,
        }
    }

    pub fn from_i64(n: i64) -> Self {
        BigFixed {
            mant: BigInt::from(n),
            prec: 0,
        }
    }

    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> Self {
        assert!(!den.is_zero());
        let mant = (num << prec) / den;
        BigFixed { mant, prec }
    }

    pub fn from_q(q: &Q, prec: u32) -> Self {
        Self::from_ratio(q.numer(), q.denom(), prec)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    /// Re-express at the given precision (truncating when lowering).
    pub fn with_prec(&self, prec: u32) -> Self {
        match prec.cmp(&self.prec) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => BigFixed {
                mant: &self.mant << (prec - self.prec),
                prec,
            },
            Ordering::Less => BigFixed {
                mant: &self.mant >> (self.prec - prec),
                prec,
            },
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        BigFixed {
            mant: self.with_prec(prec).mant + other.with_prec(prec).mant,
            prec,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        BigFixed {
            mant: -&self.mant,
            prec: self.prec,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        let shift = self.prec + other.prec - prec;
        BigFixed {
            mant: (&self.mant * &other.mant) >> shift,
            prec,
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero");
        let prec = self.prec.max(other.prec);
        // (a/2^pa) / (b/2^pb) = (a << (prec - pa + pb)) / b  at 2^-prec.
        let shift = prec - self.prec + other.prec;
        BigFixed {
            mant: (&self.mant << shift) / &other.mant,
            prec,
        }
    }

    pub fn div_u64(&self, n: u64) -> Self {
        BigFixed {
            mant: &self.mant / BigInt::from(n),
            prec: self.prec,
        }
    }

    pub fn abs(&self) -> Self {
        BigFixed {
            mant: self.mant.abs(),
            prec: self.prec,
        }
    }

    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        let prec = self.prec.max(other.prec);
        self.with_prec(prec)
            .mant
            .abs()
            .cmp(&other.with_prec(prec).mant.abs())
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.mant.bits();
        if bits <= 1000 {
            return self.mant.to_f64().unwrap_or(0.0) / 2f64.powi(self.prec as i32);
        }
        let shift = bits - 64;
        let top = (&self.mant >> shift).to_f64().unwrap_or(0.0);
        top * 2f64.powi(shift as i32 - self.prec as i32)
    }

    /// Decimal rendering with the given number of fractional digits.
    pub fn to_decimal(&self, digits: u32) -> String {
        let pow10 = BigInt::from(10u32).pow(digits);
        let scaled: BigInt = (&self.mant * &pow10) >> self.prec;
        let neg = scaled.sign() == Sign::Minus;
        let scaled = scaled.abs();
        let (int, frac) = (&scaled / &pow10, &scaled % &pow10);
        let frac_str = format!("{:0>width$}", frac.to_string(), width = digits as usize);
        format!("{}{}.{}", if neg { "-" } else { "" }, int, frac_str)
    }

    pub fn parse_decimal(s: &str, prec: u32) -> Result<Self, String> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(b) => (true, b),
            None => (false, s),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        let digits = frac_part.len() as u32;
        let combined = format!("{int_part}{frac_part}");
        let num: BigInt = combined
            .parse()
            .map_err(|e| format!("bad decimal {s:?}: {e}"))?;
        let den = BigInt::from(10u32).pow(digits);
        let val = Self::from_ratio(&num, &den, prec);
        Ok(if neg { val.neg() } else { val })
    }

    fn ulp(&self) -> f64 {
        let u = 2f64.powi(-(self.prec as i32));
        if u == 0.0 {
            f64::MIN_POSITIVE
        } else {
            u
        }
    }
}

/// High-precision value with a tracked absolute error bound.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericValue {
    pub value: BigFixed,
    pub err: f64,
}

impl NumericValue {
    pub fn exact_i64(n: i64) -> Self {
        NumericValue {
            value: BigFixed::from_i64(n),
            err: 0.0,
        }
    }

    pub fn from_q_prec(q: &Q, prec: u32) -> Self {
        let value = BigFixed::from_q(q, prec);
        NumericValue {
            err: value.ulp(),
            value,
        }
    }

    pub fn new(value: BigFixed, err: f64) -> Self {
        assert!(err >= 0.0);
        NumericValue { value, err }
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn abs_f64(&self) -> f64 {
        self.value.to_f64().abs()
    }

    /// |value| plus the error bound: a safe magnitude estimate.
    pub fn magnitude_bound(&self) -> f64 {
        self.abs_f64() + self.err
    }
}

impl Coeff for NumericValue {
    fn zero() -> Self {
        NumericValue {
            value: BigFixed::zero(),
            err: 0.0,
        }
    }

    fn one() -> Self {
        Self::exact_i64(1)
    }

    fn is_zero(&self) -> bool {
        self.value.is_zero() && self.err == 0.0
    }

    fn add(&self, other: &Self) -> Self {
        let value = self.value.add(&other.value);
        NumericValue {
            err: self.err + other.err,
            value,
        }
    }

    fn neg(&self) -> Self {
        NumericValue {
            value: self.value.neg(),
            err: self.err,
        }
    }

    fn mul(&self, other: &Self) -> Self {
        let value = self.value.mul(&other.value);
        let (a, b) = (self.abs_f64(), other.abs_f64());
        // Truncation only happens when both operands carry fractional bits.
        let trunc_err = if self.value.prec.min(other.value.prec) > 0 {
            value.ulp()
        } else {
            0.0
        };
        let err = a * other.err + b * self.err + self.err * other.err + trunc_err;
        NumericValue { value, err }
    }

    fn div_nat(&self, n: u64) -> Self {
        // Promote exact low-precision values before the truncating division.
        let prec = self.value.prec.max(working_precision());
        let value = self.value.with_prec(prec).div_u64(n);
        NumericValue {
            err: self.err / n as f64 + value.ulp(),
            value,
        }
    }

    fn inv(&self) -> Self {
        let mag = self.abs_f64();
        assert!(
            mag > 2.0 * self.err,
            "inverting a value indistinguishable from zero"
        );
        let prec = self.value.prec.max(working_precision());
        let one = BigFixed::from_i64(1).with_prec(prec);
        let value = one.div(&self.value);
        let err = self.err / (mag * mag - mag * self.err) + value.ulp();
        NumericValue { value, err }
    }

    fn from_q(q: &Q) -> Self {
        Self::from_q_prec(q, working_precision())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_ratio;

    #[test]
    fn ratio_and_back() {
        let x = BigFixed::from_ratio(&BigInt::from(1), &BigInt::from(3), 128);
        assert!((x.to_f64() - 1.0 / 3.0).abs() < 1e-15);
        let d = x.to_decimal(30);
        assert!(d.starts_with("0.333333333333333333333333333333"));
        let y = BigFixed::parse_decimal(&d, 128).unwrap();
        assert!(x.sub(&y).abs().to_f64() < 1e-29);
    }

    #[test]
    fn arithmetic_identities() {
        let a = BigFixed::from_ratio(&BigInt::from(22), &BigInt::from(7), 160);
        let b = BigFixed::from_ratio(&BigInt::from(-5), &BigInt::from(3), 160);
        let prod_div = a.mul(&b).div(&b);
        assert!(prod_div.sub(&a).abs().to_f64() < 1e-40);
        assert_eq!(a.add(&b).sub(&b).with_prec(100), a.with_prec(100));
    }

    #[test]
    fn negative_decimal() {
        let x = BigFixed::from_ratio(&BigInt::from(-1), &BigInt::from(8), 64);
        assert_eq!(&x.to_decimal(4), "-0.1250");
        assert_eq!(BigFixed::parse_decimal("-0.1250", 64).unwrap(), x);
    }

    #[test]
    fn numeric_value_error_grows() {
        set_working_precision(128);
        let third = NumericValue::from_q(&q_ratio(1, 3));
        let one = third.mul(&NumericValue::from_q(&q_ratio(3, 1)));
        assert!((one.to_f64() - 1.0).abs() < 1e-30);
        assert!(one.err > 0.0 && one.err < 1e-30);
    }
}
