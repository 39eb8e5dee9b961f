//! Shuffle regularization: the unique shuffle-algebra morphism killing the
//! letters 0 and 1 and fixing the admissible subspace.
//!
//! For a word `w = 0^p u 1^q` with `u` admissible, the decomposition
//! `A = sum 0^{sh p} sh A^0 sh 1^{sh q}` gives
//! `0^{sh p} sh u sh 1^{sh q} = p! q! w + (terms with strictly smaller
//! bidegree)`, so `reg` is computed by recursion over the (leading-zeros,
//! trailing-ones) bidegree. Results are memoized per word.

use crate::rational::Q;
use crate::series::{QSeries, Series};
use crate::word::{Alphabet, Letter, Word};
use num_traits::One;
use std::collections::HashMap;
use std::sync::Mutex;

/// Memoizing regularizer for one alphabet.
pub struct Regularizer {
    alphabet: Alphabet,
    cache: Mutex<HashMap<Word, QSeries>>,
}

impl Regularizer {
    /// Supported alphabets are {0,1} and {0,1,-1}: the ones where the
    /// admissible subspace (first letter != 0, last letter != 1) is the
    /// target of the projection.
    pub fn new(alphabet: Alphabet) -> Self {
        assert!(
            matches!(alphabet, Alphabet::A01 | Alphabet::A012),
            "shuffle regularization is defined on the level alphabets only"
        );
        Regularizer {
            alphabet,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// reg of a single word.
    pub fn reg_word(&self, w: &Word) -> QSeries {
        if let Some(hit) = self.cache.lock().unwrap().get(w) {
            return hit.clone();
        }
        let result = self.compute(w);
        self.cache.lock().unwrap().insert(w.clone(), result.clone());
        result
    }

    /// Linear extension to series. The output truncation follows the input.
    pub fn reg(&self, s: &QSeries) -> QSeries {
        assert_eq!(s.alphabet, self.alphabet, "alphabet mismatch");
        let mut out = QSeries::zero(self.alphabet, s.truncation);
        for (w, c) in s.terms() {
            out = out.add(&self.reg_word(w).with_truncation(s.truncation).scale(c));
        }
        out
    }

    fn compute(&self, w: &Word) -> QSeries {
        let trunc = w.weight();
        if w.is_admissible() {
            return Series::monomial(self.alphabet, trunc, w.clone(), Q::one());
        }
        let letters = w.letters();
        let p = letters.iter().take_while(|&&l| l == Letter::E0).count();
        let q = letters
            .iter()
            .rev()
            .take_while(|&&l| l == Letter::E1)
            .count();
        let core = &letters[p..letters.len() - q];
        debug_assert!(p + q > 0);

        // (word 0^p) sh core sh (word 1^q): the only term with p leading
        // zeros and q trailing ones is w itself, with multiplicity 1, since
        // the core starts with a non-0 and ends with a non-1 letter. reg
        // kills the whole product, which solves for reg(w).
        let mono =
            |ls: &[Letter]| Series::monomial(self.alphabet, trunc, Word(ls.to_vec()), Q::one());
        let mut s = mono(&vec![Letter::E0; p]);
        s = s.shuffle_mul(&mono(core));
        s = s.shuffle_mul(&mono(&vec![Letter::E1; q]));
        debug_assert_eq!(s.coefficient(w), Q::one());

        let mut acc = QSeries::zero(self.alphabet, trunc);
        for (v, c) in s.terms() {
            if v == w {
                continue;
            }
            acc = acc.add(&self.reg_word(v).with_truncation(trunc).scale(c));
        }
        acc.neg()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_int;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn kills_generators() {
        let r = Regularizer::new(Alphabet::A01);
        assert!(r.reg_word(&w("0")).is_zero());
        assert!(r.reg_word(&w("1")).is_zero());
    }

    #[test]
    fn fixes_admissible() {
        let r = Regularizer::new(Alphabet::A01);
        let u = w("1,0");
        assert_eq!(r.reg_word(&u).coefficient(&u), q_int(1));
        assert_eq!(r.reg_word(&u).num_terms(), 1);
    }

    #[test]
    fn weight_two_divergent() {
        // reg(e0 e1) = -e1 e0 since e0 sh e1 = e0e1 + e1e0.
        let r = Regularizer::new(Alphabet::A01);
        let s = r.reg_word(&w("0,1"));
        assert_eq!(s.coefficient(&w("1,0")), q_int(-1));
        assert_eq!(s.num_terms(), 1);
    }

    #[test]
    fn weight_three_table() {
        let r = Regularizer::new(Alphabet::A01);
        // reg(e1 e0 e1) = -2 e1 e1 e0
        let s = r.reg_word(&w("1,0,1"));
        assert_eq!(s.coefficient(&w("1,1,0")), q_int(-2));
        assert_eq!(s.num_terms(), 1);
        // reg(e0 e0 e1) = e1 e0 e0
        let s = r.reg_word(&w("0,0,1"));
        assert_eq!(s.coefficient(&w("1,0,0")), q_int(1));
        assert_eq!(s.num_terms(), 1);
    }

    #[test]
    fn three_letter_alphabet() {
        let r = Regularizer::new(Alphabet::A012);
        // e-1 rides along: reg(e0 e-1) = -e-1 e0.
        let s = r.reg_word(&w("0,-1"));
        assert_eq!(s.coefficient(&w("-1,0")), q_int(-1));
        assert_eq!(s.num_terms(), 1);
        // Admissible three-letter word with interior -1 is fixed.
        let u = w("-1,0,-1");
        assert_eq!(r.reg_word(&u).coefficient(&u), q_int(1));
    }

    #[test]
    fn idempotent_and_homomorphic() {
        let r = Regularizer::new(Alphabet::A01);
        for u in crate::word::words_of_weight(Alphabet::A01, 4) {
            let once = r.reg_word(&u);
            assert_eq!(r.reg(&once), once, "reg not idempotent on {u}");
        }
        // reg(u sh v) = reg(u) sh reg(v) on a divergent pair.
        let u = Series::monomial(Alphabet::A01, 5, w("0,1"), Q::one());
        let v = Series::monomial(Alphabet::A01, 5, w("1,0,1"), Q::one());
        assert_eq!(r.reg(&u.shuffle_mul(&v)), r.reg(&u).shuffle_mul(&r.reg(&v)));
    }
}
