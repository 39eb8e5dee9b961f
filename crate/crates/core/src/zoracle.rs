//! High-precision evaluation of level-2 iterated integrals
//! `I(0; a_1,...,a_k; 1)` with letters in {0, 1, -1} (alternating Euler
//! sums), shuffle-regularized values, and the numeric Euler-sum series.
//!
//! Admissible words are evaluated through the path-composition split at
//! 1/2: `I(0;w;1) = sum over w = uv of I(0;u;1/2) * I(1/2;v;1)`, and
//! `I(1/2;v;1) = (-1)^{|v|} I(0; rev(1-v); 1/2)` (the reflection t -> 1-t
//! sends the letters 0,1,-1 to 1,0,2). Every multiple-polylogarithm series
//! that remains has all its geometric ratios bounded by 1/2, so the nested
//! sums converge at one bit per term.

use crate::bigfloat::{BigFixed, NumericValue};
use crate::rational::Q;
use crate::regularize::Regularizer;
use crate::series::{Coeff, Series};
use crate::word::{Alphabet, Letter, Word};
use num_bigint::BigInt;
use num_traits::One;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::sync::Mutex;

/// Series with high-precision numeric coefficients.
pub type NSeries = Series<NumericValue>;

#[derive(thiserror::Error, Debug)]
pub enum OracleError {
    #[error("word {0} is not admissible (first letter 0 or last letter 1)")]
    NotAdmissible(String),
    #[error("letter {0} outside the level-2 alphabet")]
    BadLetter(String),
    #[error("cache: {0}")]
    Cache(String),
}

/// Evaluator with a per-run memo and an optional disk cache.
pub struct EulerOracle {
    pub precision_bits: u32,
    reg: Regularizer,
    memo: Mutex<HashMap<Word, NumericValue>>,
    cache: Option<Mutex<DiskCache>>,
}

impl EulerOracle {
    pub fn new(precision_bits: u32) -> Self {
        assert!(
            precision_bits >= 60,
            "at least 60 significant bits required"
        );
        EulerOracle {
            precision_bits,
            reg: Regularizer::new(Alphabet::A012),
            memo: Mutex::new(HashMap::new()),
            cache: None,
        }
    }

    pub fn with_cache(mut self, path: PathBuf) -> Result<Self, OracleError> {
        self.cache = Some(Mutex::new(DiskCache::open(path)?));
        Ok(self)
    }

    /// Value of a convergent iterated integral from 0 to 1.
    pub fn eval_iterint(&self, w: &Word) -> Result<NumericValue, OracleError> {
        for &l in w.letters() {
            if !Alphabet::A012.contains(l) {
                return Err(OracleError::BadLetter(l.label()));
            }
        }
        if !w.is_admissible() {
            return Err(OracleError::NotAdmissible(w.label()));
        }
        if let Some(hit) = self.memo.lock().unwrap().get(w) {
            return Ok(hit.clone());
        }
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.lock().unwrap().get(w, self.precision_bits) {
                self.memo.lock().unwrap().insert(w.clone(), hit.clone());
                return Ok(hit);
            }
        }
        let v = self.eval_uncached(w);
        if let Some(cache) = &self.cache {
            cache.lock().unwrap().put(w, self.precision_bits, &v)?;
        }
        self.memo.lock().unwrap().insert(w.clone(), v.clone());
        Ok(v)
    }

    /// Shuffle-regularized value, defined for every level-2 word.
    pub fn eval_reg(&self, w: &Word) -> Result<NumericValue, OracleError> {
        let mut acc = NumericValue::zero();
        for (u, q) in self.reg.reg_word(w).terms() {
            let v = self.eval_iterint(u)?;
            acc = acc.add(&v.mul(&NumericValue::from_q_prec(q, self.precision_bits)));
        }
        Ok(acc)
    }

    /// Numeric value of a rational combination of admissible words.
    pub fn eval_combo(&self, combo: &Series<Q>) -> Result<NumericValue, OracleError> {
        let mut acc = NumericValue::zero();
        for (w, q) in combo.terms() {
            let v = self.eval_iterint(w)?;
            acc = acc.add(&v.mul(&NumericValue::from_q_prec(q, self.precision_bits)));
        }
        Ok(acc)
    }

    /// The numeric Euler-sum series: the coefficient of a monomial `m` is
    /// the regularized value of the reversed word, so that
    /// `pair(h, w) = L(reg w)` for every word `w`.
    pub fn build_h_numeric(&self, max_weight: usize) -> Result<NSeries, OracleError> {
        assert!(max_weight >= 1);
        let mut h = NSeries::zero(Alphabet::A012, max_weight);
        h.add_term(Word::empty(), NumericValue::one());
        for weight in 1..=max_weight {
            for m in crate::word::words_of_weight(Alphabet::A012, weight) {
                let v = self.eval_reg(&m.reversed())?;
                h.add_term(m, v);
            }
        }
        // Shuffle multiplicativity to tolerance; low weights suffice to
        // catch a broken convention, the suites sweep the rest.
        let residual = grouplike_residual(&h, max_weight.min(3));
        let bound = 64.0 * 2f64.powi(-(self.precision_bits as i32) + 4);
        assert!(
            residual <= bound,
            "numeric series failed the group-likeness check: {residual} > {bound}"
        );
        Ok(h)
    }

    fn eval_uncached(&self, w: &Word) -> NumericValue {
        let prec = self.precision_bits + 64;
        let vals: Vec<i8> = w
            .letters()
            .iter()
            .map(|l| match l {
                Letter::E0 => 0i8,
                Letter::E1 => 1,
                Letter::Em1 => -1,
                _ => unreachable!("letters validated by caller"),
            })
            .collect();
        let k = vals.len();
        let mut total = BigFixed::zero();
        for split in 0..=k {
            let prefix = &vals[..split];
            let suffix = &vals[split..];
            let left = eval_at_half(prefix, prec);
            let reflected: Vec<i8> = suffix.iter().rev().map(|b| 1 - b).collect();
            let mut right = eval_at_half(&reflected, prec);
            if suffix.len() % 2 == 1 {
                right = right.neg();
            }
            total = total.add(&left.mul(&right));
        }
        let total = total.with_prec(self.precision_bits);
        // Engineering bound: truncation tails and ulp accumulation both sit
        // far below the four guard bits granted here.
        let err = 2f64
            .powi(-(self.precision_bits as i32) + 4)
            .max(f64::MIN_POSITIVE);
        NumericValue::new(total, err)
    }
}

/// `I(0; b_1 ... b_m; 1/2)` for letters in {0,1,-1,2} with `b_1 != 0`.
///
/// With blocks `b_i 0^{n_i - 1}` the value is
/// `(-1)^d sum_{0<m_1<...<m_d} prod_i t_i^{m_i - m_{i-1}} / m_i^{n_i}`
/// where `t_i = (1/2)/b_i`, all of modulus at most 1/2.
fn eval_at_half(letters: &[i8], prec: u32) -> BigFixed {
    if letters.is_empty() {
        return BigFixed::from_i64(1).with_prec(prec);
    }
    assert!(
        letters[0] != 0,
        "lower-divergent word reached the evaluator"
    );
    // Block decomposition.
    let mut blocks: Vec<(i8, u32)> = Vec::new();
    for &b in letters {
        if b == 0 {
            blocks.last_mut().expect("first letter nonzero").1 += 1;
        } else {
            blocks.push((b, 1));
        }
    }
    let d = blocks.len();
    let ratios: Vec<BigFixed> = blocks
        .iter()
        .map(|&(b, _)| BigFixed::from_ratio(&BigInt::one(), &BigInt::from(2 * b as i64), prec))
        .collect();

    // One bit of decay per term; the margin swallows the polynomial chain count.
    let terms = prec as usize + 64;
    let mut carry: Vec<BigFixed> = vec![BigFixed::zero(); d + 1];
    carry[0] = BigFixed::from_i64(1).with_prec(prec); // chains of length 0 at position 0
    let mut total = BigFixed::zero();
    for p in 1..=terms as u64 {
        // Descending so carry[i-1] still holds the previous position.
        for i in (1..=d).rev() {
            let mut a = ratios[i - 1].mul(&carry[i - 1]);
            for _ in 0..blocks[i - 1].1 {
                a = a.div_u64(p);
            }
            if i == d {
                total = total.add(&a);
            }
            if i < d {
                carry[i] = ratios[i].mul(&carry[i]).add(&a);
            } else {
                carry[i] = a; // unused slot kept for symmetry
            }
        }
        carry[0] = ratios[0].mul(&carry[0]);
    }
    if d % 2 == 1 {
        total.neg()
    } else {
        total
    }
}

/// log 2 by its geometric series, independent of the integral evaluator.
pub fn const_log2(prec: u32) -> BigFixed {
    let work = prec + 32;
    let mut acc = BigFixed::zero();
    let mut pow = BigFixed::from_i64(1).with_prec(work);
    let half = BigFixed::from_ratio(&BigInt::one(), &BigInt::from(2), work);
    for n in 1..=(work as u64 + 2) {
        pow = pow.mul(&half);
        acc = acc.add(&pow.div_u64(n));
    }
    acc.with_prec(prec)
}

/// zeta(2) via the central-binomial acceleration `3 sum 1/(n^2 C(2n,n))`.
pub fn const_zeta2(prec: u32) -> BigFixed {
    let work = prec + 32;
    let mut acc = BigFixed::zero();
    let mut binom = BigInt::from(2); // C(2,1)
    let mut n = BigInt::one();
    for k in 1..=(work as u64 / 2 + 16) {
        let term = BigFixed::from_ratio(&BigInt::one(), &(&n * &n * &binom), work);
        acc = acc.add(&term);
        // C(2(k+1), k+1) = C(2k,k) * 2(2k+1)/(k+1)
        binom = &binom * BigInt::from(2 * (2 * k + 1));
        binom = &binom / BigInt::from(k + 1);
        n += BigInt::one();
    }
    acc.mul(&BigFixed::from_i64(3)).with_prec(prec)
}

/// zeta(3) via `(5/2) sum (-1)^{n-1} / (n^3 C(2n,n))`.
pub fn const_zeta3(prec: u32) -> BigFixed {
    let work = prec + 32;
    let mut acc = BigFixed::zero();
    let mut binom = BigInt::from(2);
    let mut n = BigInt::one();
    let mut sign = 1i64;
    for k in 1..=(work as u64 / 2 + 16) {
        let den = &n * &n * &n * &binom;
        let term = BigFixed::from_ratio(&BigInt::from(sign), &den, work);
        acc = acc.add(&term);
        binom = &binom * BigInt::from(2 * (2 * k + 1));
        binom = &binom / BigInt::from(k + 1);
        n += BigInt::one();
        sign = -sign;
    }
    acc.mul(&BigFixed::from_ratio(
        &BigInt::from(5),
        &BigInt::from(2),
        work,
    ))
    .with_prec(prec)
}

/// Shuffle-multiplicativity residual of a numeric series: the largest
/// violation of `pair(u sh v) = pair(u) pair(v)` over word pairs of total
/// weight at most `up_to_weight`.
pub fn grouplike_residual(h: &NSeries, up_to_weight: usize) -> f64 {
    let mut worst: f64 = 0.0;
    let limit = up_to_weight.min(h.truncation);
    for wu in 1..limit {
        for wv in 1..=(limit - wu) {
            for u in crate::word::words_of_weight(h.alphabet, wu) {
                for v in crate::word::words_of_weight(h.alphabet, wv) {
                    let shuffled =
                        Series::monomial(h.alphabet, limit, u.clone(), crate::rational::q_int(1))
                            .shuffle_mul(&Series::monomial(
                                h.alphabet,
                                limit,
                                v.clone(),
                                crate::rational::q_int(1),
                            ));
                    let lhs = h.pair_combo(&shuffled);
                    let rhs = h.pair(&u).mul(&h.pair(&v));
                    worst = worst.max(lhs.add(&rhs.neg()).abs_f64());
                }
            }
        }
    }
    worst
}

/// Line-oriented disk cache: `word;precision_bits;value;err_exponent;checksum`.
struct DiskCache {
    path: PathBuf,
    entries: HashMap<(String, u32), NumericValue>,
}

impl DiskCache {
    fn open(path: PathBuf) -> Result<Self, OracleError> {
        let mut entries = HashMap::new();
        if path.exists() {
            let file = std::fs::File::open(&path)
                .map_err(|e| OracleError::Cache(format!("open {}: {e}", path.display())))?;
            for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| OracleError::Cache(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let parts: Vec<&str> = line.split(';').collect();
                if parts.len() != 5 {
                    return Err(OracleError::Cache(format!(
                        "line {}: expected 5 fields, got {}",
                        lineno + 1,
                        parts.len()
                    )));
                }
                let expected = checksum(parts[0], parts[1], parts[2], parts[3]);
                if parts[4] != expected {
                    return Err(OracleError::Cache(format!(
                        "line {}: checksum mismatch (corrupt record)",
                        lineno + 1
                    )));
                }
                let prec: u32 = parts[1].parse().map_err(|_| {
                    OracleError::Cache(format!("line {}: bad precision", lineno + 1))
                })?;
                let err_exp: i32 = parts[3].parse().map_err(|_| {
                    OracleError::Cache(format!("line {}: bad exponent", lineno + 1))
                })?;
                let value = BigFixed::parse_decimal(parts[2], prec)
                    .map_err(|e| OracleError::Cache(format!("line {}: {e}", lineno + 1)))?;
                let err = 2f64.powi(err_exp).max(f64::MIN_POSITIVE);
                entries.insert((parts[0].to_string(), prec), NumericValue::new(value, err));
            }
        }
        Ok(DiskCache { path, entries })
    }

    fn get(&self, w: &Word, prec: u32) -> Option<NumericValue> {
        self.entries.get(&(w.label(), prec)).cloned()
    }

    fn put(&mut self, w: &Word, prec: u32, v: &NumericValue) -> Result<(), OracleError> {
        let key = (w.label(), prec);
        if self.entries.contains_key(&key) {
            return Ok(());
        }
        let digits = (prec as f64 * 0.302).ceil() as u32 + 8;
        let value_str = v.value.to_decimal(digits);
        let err_exp = v.err.log2().ceil() as i32;
        let line = format!(
            "{};{};{};{};{}",
            key.0,
            prec,
            value_str,
            err_exp,
            checksum(&key.0, &prec.to_string(), &value_str, &err_exp.to_string())
        );
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| OracleError::Cache(format!("append {}: {e}", self.path.display())))?;
        writeln!(file, "{line}").map_err(|e| OracleError::Cache(e.to_string()))?;
        self.entries.insert(key, v.clone());
        Ok(())
    }
}

fn checksum(word: &str, prec: &str, value: &str, err_exp: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(word.as_bytes());
    hasher.update(b";");
    hasher.update(prec.as_bytes());
    hasher.update(b";");
    hasher.update(value.as_bytes());
    hasher.update(b";");
    hasher.update(err_exp.as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn close(a: &NumericValue, expect: f64, tol: f64) -> bool {
        (a.to_f64() - expect).abs() < tol
    }

    #[test]
    fn spot_values() {
        let oracle = EulerOracle::new(128);
        let log2 = oracle.eval_iterint(&w("-1")).unwrap();
        assert!(
            close(&log2, std::f64::consts::LN_2, 1e-14),
            "got {}",
            log2.to_f64()
        );
        let z2 = oracle.eval_iterint(&w("1,0")).unwrap();
        assert!(
            close(&z2, -1.6449340668482264, 1e-13),
            "got {}",
            z2.to_f64()
        );
        let eta2 = oracle.eval_iterint(&w("-1,0")).unwrap();
        assert!(
            close(&eta2, 0.8224670334241132, 1e-13),
            "got {}",
            eta2.to_f64()
        );
        let z3 = oracle.eval_iterint(&w("1,0,0")).unwrap();
        assert!(
            close(&z3, -1.2020569031595943, 1e-13),
            "got {}",
            z3.to_f64()
        );
    }

    #[test]
    fn matches_independent_constants() {
        let oracle = EulerOracle::new(160);
        let log2 = oracle.eval_iterint(&w("-1")).unwrap();
        let diff = log2.value.sub(&const_log2(160)).abs().to_f64();
        assert!(diff < 1e-40, "log2 mismatch {diff}");
        let z2 = oracle.eval_iterint(&w("1,0")).unwrap().value.neg();
        assert!(z2.sub(&const_zeta2(160)).abs().to_f64() < 1e-40);
        let z3 = oracle.eval_iterint(&w("1,0,0")).unwrap().value.neg();
        assert!(z3.sub(&const_zeta3(160)).abs().to_f64() < 1e-40);
    }

    #[test]
    fn regularized_values() {
        let oracle = EulerOracle::new(96);
        assert_eq!(oracle.eval_reg(&w("0")).unwrap().to_f64(), 0.0);
        let z2 = oracle.eval_reg(&w("0,1")).unwrap();
        assert!(close(&z2, 1.6449340668482264, 1e-12));
        let same = oracle.eval_reg(&w("-1,0")).unwrap();
        assert!(close(&same, 0.8224670334241132, 1e-12));
    }

    #[test]
    fn shuffle_consistency_sample() {
        let oracle = EulerOracle::new(96);
        // L(u)L(v) = L(u sh v) for u = e-1, v = e1e0.
        let u = w("-1");
        let v = w("1,0");
        let prod = oracle
            .eval_iterint(&u)
            .unwrap()
            .mul(&oracle.eval_iterint(&v).unwrap());
        let shuffled =
            Series::monomial(Alphabet::A012, 3, u, crate::rational::q_int(1)).shuffle_mul(
                &Series::monomial(Alphabet::A012, 3, v, crate::rational::q_int(1)),
            );
        let rhs = oracle.eval_combo(&shuffled).unwrap();
        assert!(prod.add(&rhs.neg()).abs_f64() < 1e-25);
    }

    #[test]
    fn h_numeric_pairs_to_values() {
        let oracle = EulerOracle::new(96);
        let h = oracle.build_h_numeric(3).unwrap();
        assert!(close(&h.pair(&w("-1")), std::f64::consts::LN_2, 1e-12));
        assert_eq!(h.pair(&w("0")).to_f64(), 0.0);
        assert!(grouplike_residual(&h, 3) < 1e-25);
    }

    #[test]
    fn precision_scaling() {
        let lo = EulerOracle::new(80);
        let hi = EulerOracle::new(160);
        let a = lo.eval_iterint(&w("-1,0,1,0")).unwrap();
        let b = hi.eval_iterint(&w("-1,0,1,0")).unwrap();
        assert!(b.err < a.err);
        let diff = a.value.sub(&b.value).abs().to_f64();
        assert!(diff <= a.err + b.err, "diff {diff} exceeds combined bounds");
    }

    #[test]
    fn disk_cache_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("euler_cache.txt");
        let word = w("-1,0");
        let fresh = {
            let oracle = EulerOracle::new(96).with_cache(path.clone()).unwrap();
            oracle.eval_iterint(&word).unwrap()
        };
        // Second oracle reads the cached record.
        let oracle2 = EulerOracle::new(96).with_cache(path.clone()).unwrap();
        let cached = oracle2.eval_iterint(&word).unwrap();
        assert!(fresh.value.sub(&cached.value).abs().to_f64() < 1e-24);

        // Corrupt one byte: the cache refuses to load.
        let mut bytes = std::fs::read(&path).unwrap();
        let idx = bytes.len() / 2;
        bytes[idx] = if bytes[idx] == b'5' { b'6' } else { b'5' };
        std::fs::write(&path, bytes).unwrap();
        assert!(EulerOracle::new(96).with_cache(path).is_err());
    }
}
