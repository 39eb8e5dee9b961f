//! Arbitrary-precision rationals and fraction-string helpers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// The coefficient field: reduced fractions with arbitrary-precision parts.
pub type Q = BigRational;

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_ratio(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Render as "p/q" (or just "p" when the denominator is 1).
pub fn q_to_string(q: &Q) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parse "p", "p/q", or "-p/q".
pub fn q_from_str(s: &str) -> Result<Q, String> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt, String> {
        t.parse::<BigInt>()
            .map_err(|e| format!("bad integer {t:?}: {e}"))
    };
    match s.split_once('/') {
        None => Ok(Q::from_integer(parse_int(s)?)),
        Some((num, den)) => {
            let d = parse_int(den)?;
            if d.is_zero() {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(Q::new(parse_int(num)?, d))
        }
    }
}

/// |q| as f64, good enough for residual reporting.
pub fn q_abs_f64(q: &Q) -> f64 {
    let num = q.numer().abs();
    let den = q.denom().clone();
    // Scale down together to stay in f64 range.
    let bits = num.bits().max(den.bits());
    if bits <= 900 {
        let n = num.to_string().parse::<f64>().unwrap_or(f64::INFINITY);
        let d = den.to_string().parse::<f64>().unwrap_or(f64::INFINITY);
        n / d
    } else {
        let shift = bits - 512;
        let n = (num >> shift)
            .to_string()
            .parse::<f64>()
            .unwrap_or(f64::INFINITY);
        let d = (den >> shift)
            .to_string()
            .parse::<f64>()
            .unwrap_or(f64::INFINITY);
        n / d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_strings_round_trip() {
        for s in ["0", "7", "-3/4", "22/7"] {
            let q = q_from_str(s).unwrap();
            assert_eq!(q_to_string(&q), s);
        }
        assert_eq!(q_from_str("4/8").unwrap(), q_ratio(1, 2));
        assert!(q_from_str("1/0").is_err());
        assert!(q_from_str("x").is_err());
    }
}
