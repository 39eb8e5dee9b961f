//! Lyndon words, their standard bracketings, and seeded random group-like
//! series (exponentials of random Lie elements).

use crate::rational::Q;
use crate::series::{QSeries, Series};
use crate::word::{Alphabet, Letter, Word};
use num_bigint::BigInt;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// All Lyndon words over `letters` of length 1..=max_len (Duval's algorithm).
pub fn lyndon_words(letters: &[Letter], max_len: usize) -> Vec<Word> {
    let k = letters.len();
    let mut out = Vec::new();
    let mut w: Vec<usize> = vec![0];
    loop {
        if w.len() <= max_len {
            out.push(Word(w.iter().map(|&i| letters[i]).collect()));
        }
        // Extend periodically to max_len, then increment the last letter.
        let mut t = w.clone();
        while t.len() < max_len {
            t.push(t[t.len() % w.len()]);
        }
        while let Some(&last) = t.last() {
            if last == k - 1 {
                t.pop();
            } else {
                break;
            }
        }
        if t.is_empty() {
            break;
        }
        *t.last_mut().unwrap() += 1;
        w = t;
    }
    out.sort_by_key(|w| (w.weight(), w.clone()));
    out
}

/// The standard bracketing of a Lyndon word, expanded in the free algebra.
pub fn lyndon_bracket(alphabet: Alphabet, w: &Word, truncation: usize) -> QSeries {
    if w.weight() == 1 {
        return Series::from_letter(alphabet, truncation, w.letters()[0]);
    }
    // Standard factorization w = uv with v the longest proper Lyndon suffix.
    let letters = w.letters();
    let n = letters.len();
    let mut split = n - 1;
    for i in 1..n {
        let suffix = Word(letters[i..].to_vec());
        if is_lyndon(&suffix) {
            split = i;
            break;
        }
    }
    let u = Word(letters[..split].to_vec());
    let v = Word(letters[split..].to_vec());
    let bu = lyndon_bracket(alphabet, &u, truncation);
    let bv = lyndon_bracket(alphabet, &v, truncation);
    bu.concat_mul(&bv).sub(&bv.concat_mul(&bu))
}

fn is_lyndon(w: &Word) -> bool {
    let n = w.weight();
    if n == 0 {
        return false;
    }
    for i in 1..n {
        let rot: Vec<Letter> = w.letters()[i..]
            .iter()
            .chain(w.letters()[..i].iter())
            .copied()
            .collect();
        if Word(rot) <= *w {
            return false;
        }
    }
    true
}

/// exp of a random rational combination of Lyndon brackets up to `weight`.
/// Deterministic per seed; group-like by construction.
pub fn random_grouplike(alphabet: Alphabet, weight: usize, seed: u64) -> QSeries {
    random_grouplike_killing(alphabet, weight, seed, &[])
}

/// Same, with the Lyndon generators listed in `kill` left out of the Lie
/// element. Passing the letters 0 and 1 produces random group-like series
/// with vanishing e0 and e1 coefficients, the standing hypothesis of the
/// specialization lemmas.
pub fn random_grouplike_killing(
    alphabet: Alphabet,
    weight: usize,
    seed: u64,
    kill: &[Letter],
) -> QSeries {
    assert!(weight >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters = alphabet.letters();
    let mut lie = QSeries::zero(alphabet, weight);
    for w in lyndon_words(&letters, weight) {
        let num = rng.gen_range(-6i64..=6);
        let den = rng.gen_range(1i64..=4);
        if w.weight() == 1 && kill.contains(&w.letters()[0]) {
            continue;
        }
        if num == 0 {
            continue;
        }
        let c = Q::new(BigInt::from(num), BigInt::from(den));
        lie = lie.add(&lyndon_bracket(alphabet, &w, weight).scale(&c));
    }
    lie.exp().expect("Lie elements have zero constant term")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lyndon_counts_match_necklace_numbers() {
        // Over a 2-letter alphabet: 2, 1, 2, 3, 6, 9 words of lengths 1..=6.
        let ws = lyndon_words(&Alphabet::A01.letters(), 6);
        let mut by_len = [0usize; 7];
        for w in &ws {
            by_len[w.weight()] += 1;
        }
        assert_eq!(&by_len[1..], &[2, 1, 2, 3, 6, 9]);
    }

    #[test]
    fn brackets_are_primitive_enough() {
        // [e0,[e0,e1]] expands with the right signs.
        let b = lyndon_bracket(Alphabet::A01, &Word::parse("0,0,1").unwrap(), 3);
        assert_eq!(
            b.coefficient(&Word::parse("0,0,1").unwrap()),
            Q::from_integer(1.into())
        );
        assert_eq!(
            b.coefficient(&Word::parse("0,1,0").unwrap()),
            Q::from_integer((-2).into())
        );
        assert_eq!(
            b.coefficient(&Word::parse("1,0,0").unwrap()),
            Q::from_integer(1.into())
        );
    }

    #[test]
    fn random_grouplike_is_grouplike_and_deterministic() {
        let h1 = random_grouplike(Alphabet::A012, 3, 7);
        let h2 = random_grouplike(Alphabet::A012, 3, 7);
        assert_eq!(h1, h2);
        assert!(h1.is_grouplike(3));
        assert_ne!(h1, random_grouplike(Alphabet::A012, 3, 8));
    }
}
