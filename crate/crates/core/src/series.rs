//! Weight-graded sparse series over a free non-commutative algebra.
//!
//! A [`Series`] stores a finite map from canonical words to nonzero
//! coefficients, together with its alphabet tag and a hard truncation
//! weight: every operation discards terms of weight above the bound.
//! Coefficients are generic so the same machinery serves exact rationals
//! and high-precision numeric values.

use crate::rational::{q_from_str, q_to_string, Q};
use crate::word::{Alphabet, Letter, Word};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Coefficient ring operations needed by the series arithmetic.
pub trait Coeff: Clone + PartialEq + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// Exact division by a positive integer (used by exp/log and shuffle
    /// regularization).
    fn div_nat(&self, n: u64) -> Self;
    /// Multiplicative inverse; panics on zero. Only called on constant terms
    /// of invertible series.
    fn inv(&self) -> Self;
    fn from_q(q: &Q) -> Self;
}

impl Coeff for Q {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div_nat(&self, n: u64) -> Self {
        self / Q::from_integer(n.into())
    }
    fn inv(&self) -> Self {
        assert!(!Zero::is_zero(self), "inverting zero coefficient");
        self.recip()
    }
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
}

/// Sparse truncated series; see the module docs.
#[derive(Clone, PartialEq, Debug)]
pub struct Series<C: Coeff> {
    pub alphabet: Alphabet,
    pub truncation: usize,
    terms: BTreeMap<Word, C>,
}

/// Series with exact rational coefficients.
pub type QSeries = Series<Q>;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum SeriesError {
    #[error("alphabet mismatch: {0:?} vs {1:?}")]
    AlphabetMismatch(Alphabet, Alphabet),
    #[error("word weight {0} exceeds truncation {1}")]
    WeightExceedsTruncation(usize, usize),
    #[error("constant term must be {expected} for {op}")]
    BadConstantTerm {
        op: &'static str,
        expected: &'static str,
    },
}

impl<C: Coeff> Series<C> {
    pub fn zero(alphabet: Alphabet, truncation: usize) -> Self {
        Series {
            alphabet,
            truncation,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(alphabet: Alphabet, truncation: usize) -> Self {
        Self::monomial(alphabet, truncation, Word::empty(), C::one())
    }

    pub fn monomial(alphabet: Alphabet, truncation: usize, word: Word, coeff: C) -> Self {
        let mut s = Self::zero(alphabet, truncation);
        s.add_term(word, coeff);
        s
    }

    pub fn from_letter(alphabet: Alphabet, truncation: usize, letter: Letter) -> Self {
        Self::monomial(alphabet, truncation, Word::single(letter), C::one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `word` read directly (no reversal).
    pub fn coefficient(&self, word: &Word) -> C {
        self.terms.get(word).cloned().unwrap_or_else(C::zero)
    }

    pub fn constant_term(&self) -> C {
        self.coefficient(&Word::empty())
    }

    /// The pairing convention: the coefficient of the *reversed* word,
    /// extended linearly.
    pub fn pair(&self, word: &Word) -> C {
        assert!(
            word.weight() <= self.truncation,
            "pairing weight {} exceeds truncation {}",
            word.weight(),
            self.truncation
        );
        self.coefficient(&word.reversed())
    }

    /// Pairing against a rational combination of words.
    pub fn pair_combo(&self, combo: &QSeries) -> C {
        let mut acc = C::zero();
        for (w, q) in combo.terms() {
            let p = self.pair(w);
            if !p.is_zero() {
                acc = acc.add(&p.mul(&C::from_q(q)));
            }
        }
        acc
    }

    pub fn add_term(&mut self, word: Word, coeff: C) {
        if coeff.is_zero() || word.weight() > self.truncation {
            return;
        }
        debug_assert!(word.letters().iter().all(|&l| self.alphabet.contains(l)));
        match self.terms.entry(word) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&coeff);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.alphabet, other.alphabet, "alphabet mismatch");
        let mut out = self.clone();
        out.truncation = self.truncation.min(other.truncation);
        out.terms.retain(|w, _| w.weight() <= out.truncation);
        for (w, c) in other.terms() {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero(self.alphabet, self.truncation);
        for (w, c) in self.terms() {
            out.terms.insert(w.clone(), c.neg());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &C) -> Self {
        let mut out = Self::zero(self.alphabet, self.truncation);
        if k.is_zero() {
            return out;
        }
        for (w, c) in self.terms() {
            out.add_term(w.clone(), c.mul(k));
        }
        out
    }

    pub fn scale_q(&self, q: &Q) -> Self {
        self.scale(&C::from_q(q))
    }

    /// Bilinear concatenation product, truncated.
    pub fn concat_mul(&self, other: &Self) -> Self {
        assert_eq!(self.alphabet, other.alphabet, "alphabet mismatch");
        let trunc = self.truncation.min(other.truncation);
        let mut out = Self::zero(self.alphabet, trunc);
        for (u, cu) in self.terms() {
            if u.weight() > trunc {
                continue;
            }
            for (v, cv) in other.terms() {
                if u.weight() + v.weight() > trunc {
                    continue;
                }
                out.add_term(u.concat(v), cu.mul(cv));
            }
        }
        out
    }

    /// Bilinear shuffle product, truncated.
    pub fn shuffle_mul(&self, other: &Self) -> Self {
        assert_eq!(self.alphabet, other.alphabet, "alphabet mismatch");
        let trunc = self.truncation.min(other.truncation);
        let mut out = Self::zero(self.alphabet, trunc);
        for (u, cu) in self.terms() {
            for (v, cv) in other.terms() {
                if u.weight() + v.weight() > trunc {
                    continue;
                }
                let c = cu.mul(cv);
                for (w, mult) in shuffle_words(u, v) {
                    out.add_term(w, c.mul(&C::from_q(&Q::from_integer(mult.into()))));
                }
            }
        }
        out
    }

    /// Restriction to one weight.
    pub fn weight_slice(&self, weight: usize) -> Self {
        let mut out = Self::zero(self.alphabet, self.truncation);
        for (w, c) in self.terms() {
            if w.weight() == weight {
                out.terms.insert(w.clone(), c.clone());
            }
        }
        out
    }

    pub fn truncated(&self, truncation: usize) -> Self {
        let mut out = self.clone();
        out.truncation = truncation.min(self.truncation);
        out.terms.retain(|w, _| w.weight() <= out.truncation);
        out
    }

    /// Re-tag with a (possibly larger) truncation bound; existing terms
    /// above the new bound are dropped.
    pub fn with_truncation(&self, truncation: usize) -> Self {
        let mut out = self.clone();
        out.truncation = truncation;
        out.terms.retain(|w, _| w.weight() <= truncation);
        out
    }

    pub fn max_weight(&self) -> usize {
        self.terms.keys().map(|w| w.weight()).max().unwrap_or(0)
    }

    /// Truncated exponential; requires zero constant term.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.constant_term().is_zero() {
            return Err(SeriesError::BadConstantTerm {
                op: "exp",
                expected: "0",
            });
        }
        let mut acc = Self::one(self.alphabet, self.truncation);
        let mut pow = Self::one(self.alphabet, self.truncation);
        for n in 1..=self.truncation as u64 {
            pow = pow.concat_mul(self);
            pow = pow.map_coeffs(|c| c.div_nat(n));
            if pow.is_zero() {
                break;
            }
            acc = acc.add(&pow);
        }
        Ok(acc)
    }

    /// Truncated logarithm; requires constant term 1.
    pub fn log(&self) -> Result<Self, SeriesError> {
        if self.constant_term() != C::one() {
            return Err(SeriesError::BadConstantTerm {
                op: "log",
                expected: "1",
            });
        }
        let mut x = self.clone();
        x.terms.remove(&Word::empty());
        let mut acc = Self::zero(self.alphabet, self.truncation);
        let mut pow = Self::one(self.alphabet, self.truncation);
        for n in 1..=self.truncation as u64 {
            pow = pow.concat_mul(&x);
            if pow.is_zero() {
                break;
            }
            let sign = if n % 2 == 1 { 1 } else { -1 };
            acc = acc.add(&pow.map_coeffs(|c| {
                let t = c.div_nat(n);
                if sign < 0 {
                    t.neg()
                } else {
                    t
                }
            }));
        }
        Ok(acc)
    }

    /// Multiplicative inverse of a series with invertible constant term.
    pub fn inverse(&self) -> Self {
        let c0 = self.constant_term();
        assert!(
            !c0.is_zero(),
            "series with zero constant term is not invertible"
        );
        let c0inv = c0.inv();
        // f = c0 (1 + x)  =>  f^{-1} = (sum (-x)^n) c0^{-1}
        let mut x = self.scale(&c0inv);
        x.terms.remove(&Word::empty());
        let mut acc = Self::one(self.alphabet, self.truncation);
        let mut pow = Self::one(self.alphabet, self.truncation);
        for _ in 1..=self.truncation {
            pow = pow.concat_mul(&x).neg();
            if pow.is_zero() {
                break;
            }
            acc = acc.add(&pow);
        }
        acc.scale(&c0inv)
    }

    pub fn map_coeffs(&self, f: impl Fn(&C) -> C) -> Self {
        let mut out = Self::zero(self.alphabet, self.truncation);
        for (w, c) in self.terms() {
            out.add_term(w.clone(), f(c));
        }
        out
    }

    /// The homomorphic (or anti-homomorphic) extension of a letter map.
    /// Every letter of the source alphabet must have an image over the
    /// target alphabet; images are substituted and expanded with
    /// concatenation, in reversed monomial order when `anti` is set.
    pub fn substitute(
        &self,
        target: Alphabet,
        images: &BTreeMap<Letter, Series<C>>,
        anti: bool,
    ) -> Self {
        let mut out = Series::zero(target, self.truncation);
        for (w, c) in self.terms() {
            let mut img = Series::one(target, self.truncation);
            let letters: Vec<Letter> = if anti {
                w.letters().iter().rev().copied().collect()
            } else {
                w.letters().to_vec()
            };
            for l in letters {
                let li = images
                    .get(&l)
                    .unwrap_or_else(|| panic!("substitution image missing for letter {l}"));
                img = img.concat_mul(li);
                if img.is_zero() {
                    break;
                }
            }
            out = out.add(&img.scale(c));
        }
        out
    }

    /// Series whose words start with `l`, with that first letter stripped.
    pub fn left_quotient(&self, l: Letter) -> Self {
        let mut out = Self::zero(self.alphabet, self.truncation);
        for (w, c) in self.terms() {
            if w.letters().first() == Some(&l) {
                out.terms.insert(Word(w.letters()[1..].to_vec()), c.clone());
            }
        }
        out
    }
}

impl QSeries {
    /// Exact group-likeness: the pairing is multiplicative on shuffles for
    /// all word pairs of total weight at most `up_to_weight`.
    pub fn is_grouplike(&self, up_to_weight: usize) -> bool {
        if self.constant_term() != crate::rational::q_int(1) {
            return false;
        }
        let limit = up_to_weight.min(self.truncation);
        for wu in 1..limit {
            for wv in 1..=(limit - wu) {
                for u in crate::word::words_of_weight(self.alphabet, wu) {
                    for v in crate::word::words_of_weight(self.alphabet, wv) {
                        let shuffled = Series::monomial(
                            self.alphabet,
                            limit,
                            u.clone(),
                            crate::rational::q_int(1),
                        )
                        .shuffle_mul(&Series::monomial(
                            self.alphabet,
                            limit,
                            v.clone(),
                            crate::rational::q_int(1),
                        ));
                        let lhs = self.pair_combo(&shuffled);
                        if lhs != self.pair(&u) * self.pair(&v) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Largest |coefficient| as f64, for residual reporting.
    pub fn max_abs(&self) -> f64 {
        self.terms
            .values()
            .map(crate::rational::q_abs_f64)
            .fold(0.0, f64::max)
    }
}

/// All distinct shuffles of `u` and `v` with multiplicities.
pub fn shuffle_words(u: &Word, v: &Word) -> Vec<(Word, u64)> {
    let n = u.weight();
    let m = v.weight();
    if n == 0 {
        return vec![(v.clone(), 1)];
    }
    if m == 0 {
        return vec![(u.clone(), 1)];
    }
    let total = n + m;
    assert!(total <= 63, "shuffle of unreasonably long words");
    let mut acc: BTreeMap<Word, u64> = BTreeMap::new();
    // Enumerate the positions of u inside the merged word (Gosper's hack).
    let mut mask: u64 = (1 << n) - 1;
    let limit: u64 = 1 << total;
    while mask < limit {
        let mut letters = Vec::with_capacity(total);
        let (mut iu, mut iv) = (0usize, 0usize);
        for pos in 0..total {
            if mask & (1 << pos) != 0 {
                letters.push(u.letters()[iu]);
                iu += 1;
            } else {
                letters.push(v.letters()[iv]);
                iv += 1;
            }
        }
        *acc.entry(Word(letters)).or_insert(0) += 1;
        // Next subset of the same popcount.
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    acc.into_iter().collect()
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    word: String,
    coeff: String,
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    alphabet: String,
    truncation: usize,
    terms: Vec<TermJson>,
}

impl QSeries {
    pub fn to_json(&self) -> serde_json::Value {
        let terms = self
            .terms()
            .map(|(w, c)| TermJson {
                word: w.label(),
                coeff: q_to_string(c),
            })
            .collect();
        serde_json::to_value(SeriesJson {
            alphabet: self.alphabet.name().to_string(),
            truncation: self.truncation,
            terms,
        })
        .expect("series serialization cannot fail")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, String> {
        let sj: SeriesJson = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
        let alphabet = Alphabet::from_name(&sj.alphabet)
            .ok_or_else(|| format!("unknown alphabet {:?}", sj.alphabet))?;
        let mut s = Series::zero(alphabet, sj.truncation);
        for t in sj.terms {
            let w = Word::parse(&t.word)?;
            if w.weight() > sj.truncation {
                return Err(format!(
                    "term {:?} exceeds truncation {}",
                    t.word, sj.truncation
                ));
            }
            for &l in w.letters() {
                if !alphabet.contains(l) {
                    return Err(format!("letter {l} not in alphabet {:?}", sj.alphabet));
                }
            }
            s.add_term(w, q_from_str(&t.coeff)?);
        }
        Ok(s)
    }
}

/// Convenience: residual magnitude of a rational, for check reports.
pub fn q_residual(q: &Q) -> f64 {
    if Zero::is_zero(q) {
        0.0
    } else {
        crate::rational::q_abs_f64(&q.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_int;
    use crate::word::Letter::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn mono(alpha: Alphabet, t: usize, s: &str) -> QSeries {
        Series::monomial(alpha, t, w(s), crate::rational::q_int(1))
    }

    #[test]
    fn shuffle_of_letters() {
        // e0 sh e1 = e0e1 + e1e0
        let a = mono(Alphabet::A01, 4, "0");
        let b = mono(Alphabet::A01, 4, "1");
        let s = a.shuffle_mul(&b);
        assert_eq!(s.coefficient(&w("0,1")), q_int(1));
        assert_eq!(s.coefficient(&w("1,0")), q_int(1));
        assert_eq!(s.num_terms(), 2);
    }

    #[test]
    fn shuffle_unit() {
        let one = QSeries::one(Alphabet::A01, 4);
        let x = mono(Alphabet::A01, 4, "1,0");
        assert_eq!(one.shuffle_mul(&x), x);
    }

    #[test]
    fn shuffle_three_interleavings() {
        // e1 sh e1e0 = 2 e1e1e0 + e1e0e1
        let a = mono(Alphabet::A01, 4, "1");
        let b = mono(Alphabet::A01, 4, "1,0");
        let s = a.shuffle_mul(&b);
        assert_eq!(s.coefficient(&w("1,1,0")), q_int(2));
        assert_eq!(s.coefficient(&w("1,0,1")), q_int(1));
        assert_eq!(s.num_terms(), 2);
    }

    #[test]
    fn concat_examples() {
        let e0 = QSeries::from_letter(Alphabet::A01, 2, E0);
        let e1 = QSeries::from_letter(Alphabet::A01, 2, E1);
        let one = QSeries::one(Alphabet::A01, 2);
        let p = one.add(&e0).concat_mul(&one.add(&e1));
        assert_eq!(p.coefficient(&w("0,1")), q_int(1));
        assert_eq!(p.constant_term(), q_int(1));
        // Grading cut at truncation 1.
        let p1 = one
            .add(&e0)
            .truncated(1)
            .concat_mul(&one.add(&e1).truncated(1));
        assert_eq!(p1.coefficient(&w("0,1")), q_int(0));
        assert_eq!(p1.num_terms(), 3);
    }

    #[test]
    fn pairing_reverses() {
        let phi = mono(Alphabet::A01, 3, "0,1");
        assert_eq!(phi.pair(&w("1,0")), q_int(1));
        assert_eq!(phi.pair(&w("0,1")), q_int(0));
        assert_eq!(
            QSeries::one(Alphabet::A01, 3).pair(&Word::empty()),
            q_int(1)
        );
    }

    #[test]
    fn exp_log_inverse_pair() {
        let x = QSeries::from_letter(Alphabet::A01, 2, E0);
        let e = x.exp().unwrap();
        assert_eq!(e.coefficient(&w("0,0")), crate::rational::q_ratio(1, 2));
        let l = QSeries::one(Alphabet::A01, 2)
            .add(&QSeries::from_letter(Alphabet::A01, 2, E1))
            .log()
            .unwrap();
        assert_eq!(l.coefficient(&w("1")), q_int(1));
        assert_eq!(l.coefficient(&w("1,1")), crate::rational::q_ratio(-1, 2));

        let both = QSeries::from_letter(Alphabet::A01, 5, E0).add(&QSeries::from_letter(
            Alphabet::A01,
            5,
            E1,
        ));
        assert_eq!(both.exp().unwrap().log().unwrap(), both);
    }

    #[test]
    fn series_inverse() {
        let f = QSeries::one(Alphabet::A01, 4).add(&mono(Alphabet::A01, 4, "0"));
        let g = f.inverse();
        assert_eq!(f.concat_mul(&g), QSeries::one(Alphabet::A01, 4));
    }

    #[test]
    fn grouplike_detection() {
        let x = QSeries::from_letter(Alphabet::A01, 4, E0).scale_q(&crate::rational::q_ratio(3, 7));
        assert!(x.exp().unwrap().is_grouplike(4));
        // 1 + e0e1 is not group-like at weight 2.
        let bad = QSeries::one(Alphabet::A01, 2).add(&mono(Alphabet::A01, 2, "0,1"));
        assert!(!bad.is_grouplike(2));
    }

    #[test]
    fn json_round_trip() {
        let s = mono(Alphabet::A012, 3, "1,0,-1").scale_q(&crate::rational::q_ratio(-5, 3));
        let j = s.to_json();
        assert_eq!(QSeries::from_json(&j).unwrap(), s);
    }
}
