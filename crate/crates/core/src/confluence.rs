//! The confluence-relation machinery: the automorphism varrho, the
//! doubling map dist, the star words and theta recursion, the pluggable
//! varsigma map, the linear map wp, the letter-deleting derivations
//! `partial_c` driven by exact orders of vanishing, the `reg_{z->0}`
//! pipeline, the map phi, and the relation family `u|_{z->1} - phi(u)`.
//!
//! Everything is weight-graded; the engine caches the per-weight data
//! (theta-one images, basis decompositions, shuffle-splittings) so that
//! relation generation over a full weight class stays close to table
//! lookups.

use crate::qlinalg::{decompose_in_basis, QMatrix};
use crate::rational::{q_from_str, Q};
use crate::regularize::Regularizer;
use crate::series::{QSeries, Series};
use crate::word::{words_of_weight, Alphabet, Letter, Word};
use num_traits::{One, Zero};
use serde::Deserialize;
use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

#[derive(thiserror::Error, Debug)]
pub enum ConfluenceError {
    #[error("varsigma plug-in is required for this computation but none is loaded")]
    VarsigmaMissing,
    #[error("varsigma file: {0}")]
    VarsigmaFile(String),
    #[error("input is not in the required subspace: {0}")]
    NotInSubspace(String),
    #[error("decomposition failed: {0}")]
    Decompose(String),
}

/// A composition (k_1,...,k_d) with entries >= 1; d = 0 allowed.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct KTuple(pub Vec<u32>);

impl KTuple {
    pub fn weight(&self) -> usize {
        self.0.iter().map(|&k| k as usize).sum()
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

impl std::fmt::Display for KTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({})",
            self.0
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(",")
        )
    }
}

/// All compositions of `n`, ordered deterministically (first part ascending).
pub fn compositions(n: usize) -> Vec<KTuple> {
    if n == 0 {
        return vec![KTuple(Vec::new())];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for rest in compositions(n - first) {
            let mut v = vec![first as u32];
            v.extend(rest.0);
            out.push(KTuple(v));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Letter maps.

fn subst_map(pairs: &[(Letter, QSeries)]) -> BTreeMap<Letter, QSeries> {
    pairs.iter().cloned().collect()
}

fn letter_series(alpha: Alphabet, trunc: usize, l: Letter) -> QSeries {
    QSeries::from_letter(alpha, trunc, l)
}

/// The automorphism varrho of the two-letter algebra: e0 -> e0 - e1,
/// e1 -> -e1.
pub fn varrho(u: &QSeries) -> QSeries {
    assert_eq!(u.alphabet, Alphabet::A01);
    let t = u.truncation;
    let images = subst_map(&[
        (
            Letter::E0,
            letter_series(Alphabet::A01, t, Letter::E0).sub(&letter_series(
                Alphabet::A01,
                t,
                Letter::E1,
            )),
        ),
        (
            Letter::E1,
            letter_series(Alphabet::A01, t, Letter::E1).neg(),
        ),
    ]);
    u.substitute(Alphabet::A01, &images, false)
}

/// The doubling homomorphism: e0 -> 2 e0, e1 -> e1 + e-1.
pub fn dist(u: &QSeries) -> QSeries {
    assert_eq!(u.alphabet, Alphabet::A01);
    let t = u.truncation;
    let images = subst_map(&[
        (
            Letter::E0,
            letter_series(Alphabet::A012, t, Letter::E0).scale_q(&Q::from_integer(2.into())),
        ),
        (
            Letter::E1,
            letter_series(Alphabet::A012, t, Letter::E1).add(&letter_series(
                Alphabet::A012,
                t,
                Letter::Em1,
            )),
        ),
    ]);
    u.substitute(Alphabet::A012, &images, false)
}

/// Specialization `z -> 1`: e0 -> e0, e-1 and e-z2 -> e-1, ez -> e1.
pub fn z_to_one(u: &QSeries) -> QSeries {
    assert_eq!(u.alphabet, Alphabet::AB);
    let t = u.truncation;
    let images = subst_map(&[
        (Letter::E0, letter_series(Alphabet::A012, t, Letter::E0)),
        (Letter::Em1, letter_series(Alphabet::A012, t, Letter::Em1)),
        (Letter::Emz2, letter_series(Alphabet::A012, t, Letter::Em1)),
        (Letter::Ez, letter_series(Alphabet::A012, t, Letter::E1)),
    ]);
    u.substitute(Alphabet::A012, &images, false)
}

// ---------------------------------------------------------------------------
// Subspace predicates.

/// B: words over {0,-1,z,-z2} with first letter != 0 and last letter != z.
pub fn in_b(w: &Word) -> bool {
    w.letters().iter().all(|&l| Alphabet::AB.contains(l))
        && w.letters().first() != Some(&Letter::E0)
        && w.letters().last() != Some(&Letter::Ez)
}

/// B' = B restricted to the letters {0, z, -z2}.
pub fn in_bp(w: &Word) -> bool {
    in_b(w) && w.letters().iter().all(|&l| l != Letter::Em1)
}

/// B'' = B' with first letter z (or the empty word).
pub fn in_bpp(w: &Word) -> bool {
    in_bp(w) && (w.is_empty() || w.letters()[0] == Letter::Ez)
}

/// B''' = B' over the letters {0, -z2} only.
pub fn in_bppp(w: &Word) -> bool {
    in_bp(w) && w.letters().iter().all(|&l| l != Letter::Ez)
}

/// C: the empty word or words over {0,1} starting with e1.
pub fn in_c(w: &Word) -> bool {
    w.letters().iter().all(|&l| Alphabet::A01.contains(l))
        && (w.is_empty() || w.letters()[0] == Letter::E1)
}

pub fn b_basis(weight: usize) -> Vec<Word> {
    words_of_weight(Alphabet::AB, weight)
        .into_iter()
        .filter(in_b)
        .collect()
}

fn bp_basis(weight: usize) -> Vec<Word> {
    words_of_weight(Alphabet::AB, weight)
        .into_iter()
        .filter(in_bp)
        .collect()
}

fn bpp_basis(weight: usize) -> Vec<Word> {
    if weight == 0 {
        return vec![Word::empty()];
    }
    words_of_weight(Alphabet::AB, weight)
        .into_iter()
        .filter(in_bpp)
        .collect()
}

fn bppp_basis(weight: usize) -> Vec<Word> {
    if weight == 0 {
        return vec![Word::empty()];
    }
    words_of_weight(Alphabet::AB, weight)
        .into_iter()
        .filter(in_bppp)
        .collect()
}

/// Admissible words over {0,1,-1} of one weight.
pub fn admissible_basis(weight: usize) -> Vec<Word> {
    words_of_weight(Alphabet::A012, weight)
        .into_iter()
        .filter(Word::is_admissible)
        .collect()
}

// ---------------------------------------------------------------------------
// Star words and the theta recursion.

fn block_word(k: u32) -> Word {
    let mut v = vec![Letter::E1];
    v.extend(std::iter::repeat(Letter::E0).take(k as usize - 1));
    Word(v)
}

/// w-star(k_1,...,k_d) = -e1 e0^{k1-1} (e0-e1) e0^{k2-1} ... (e0-e1) e0^{kd-1}.
pub fn w_star(k: &KTuple, trunc: usize) -> QSeries {
    if k.depth() == 0 {
        return QSeries::one(Alphabet::A01, trunc);
    }
    let e0 = letter_series(Alphabet::A01, trunc, Letter::E0);
    let e1 = letter_series(Alphabet::A01, trunc, Letter::E1);
    let e0m1 = e0.sub(&e1);
    let mut acc = e1.neg();
    for (j, &kj) in k.0.iter().enumerate() {
        if j > 0 {
            acc = acc.concat_mul(&e0m1);
        }
        for _ in 0..kj - 1 {
            acc = acc.concat_mul(&e0);
        }
    }
    acc
}

/// The theta recursion: theta() = 1 and
/// theta(k_1..k_d) = -sum_j (block(k_j) block(k_{j-1}) ... block(k_1))
///                   shuffled with theta(k_{j+1}..k_d).
pub fn theta(k: &KTuple, trunc: usize) -> QSeries {
    if k.depth() == 0 {
        return QSeries::one(Alphabet::A01, trunc);
    }
    let mut acc = QSeries::zero(Alphabet::A01, trunc);
    let mut prefix = Word::empty();
    for j in 1..=k.depth() {
        // Blocks in descending order: k_j, k_{j-1}, ..., k_1.
        prefix = block_word(k.0[j - 1]).concat(&prefix);
        let tail = KTuple(k.0[j..].to_vec());
        let part = Series::monomial(Alphabet::A01, trunc, prefix.clone(), Q::one())
            .shuffle_mul(&theta(&tail, trunc));
        acc = acc.sub(&part);
    }
    acc
}

// ---------------------------------------------------------------------------
// The pluggable varsigma map.

/// An algebra (or anti-algebra) endomorphism of the two-letter shuffle
/// algebra, supplied externally. The relation machinery refuses to run
/// without one; candidates are validated against the numeric annihilation
/// invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct Varsigma {
    pub name: String,
    pub anti: bool,
    image0: QSeries,
    image1: QSeries,
}

#[derive(Deserialize)]
struct VarsigmaTermFile {
    word: String,
    coeff: String,
}

#[derive(Deserialize)]
struct VarsigmaFile {
    name: String,
    #[serde(default)]
    anti: bool,
    e0: Vec<VarsigmaTermFile>,
    e1: Vec<VarsigmaTermFile>,
}

impl Varsigma {
    /// The identity map.
    pub fn identity() -> Self {
        let t = 8;
        Varsigma {
            name: "identity".into(),
            anti: false,
            image0: letter_series(Alphabet::A01, t, Letter::E0),
            image1: letter_series(Alphabet::A01, t, Letter::E1),
        }
    }

    /// The varrho-shaped candidate: e0 -> e0 - e1, e1 -> -e1.
    pub fn varrho_like() -> Self {
        let t = 8;
        Varsigma {
            name: "varrho".into(),
            anti: false,
            image0: letter_series(Alphabet::A01, t, Letter::E0).sub(&letter_series(
                Alphabet::A01,
                t,
                Letter::E1,
            )),
            image1: letter_series(Alphabet::A01, t, Letter::E1).neg(),
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "identity" => Some(Self::identity()),
            "varrho" => Some(Self::varrho_like()),
            _ => None,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self, ConfluenceError> {
        let file: VarsigmaFile =
            serde_json::from_str(s).map_err(|e| ConfluenceError::VarsigmaFile(e.to_string()))?;
        let build = |terms: &[VarsigmaTermFile]| -> Result<QSeries, ConfluenceError> {
            let mut s = QSeries::zero(Alphabet::A01, 8);
            for t in terms {
                let w = Word::parse(&t.word).map_err(ConfluenceError::VarsigmaFile)?;
                for &l in w.letters() {
                    if !Alphabet::A01.contains(l) {
                        return Err(ConfluenceError::VarsigmaFile(format!(
                            "letter {l} outside the two-letter alphabet"
                        )));
                    }
                }
                let c = q_from_str(&t.coeff).map_err(ConfluenceError::VarsigmaFile)?;
                s.add_term(w, c);
            }
            Ok(s)
        };
        Ok(Varsigma {
            name: file.name,
            anti: file.anti,
            image0: build(&file.e0)?,
            image1: build(&file.e1)?,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfluenceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfluenceError::VarsigmaFile(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn apply(&self, u: &QSeries) -> QSeries {
        assert_eq!(u.alphabet, Alphabet::A01);
        let images = subst_map(&[
            (Letter::E0, self.image0.truncated(u.truncation)),
            (Letter::E1, self.image1.truncated(u.truncation)),
        ]);
        u.substitute(Alphabet::A01, &images, self.anti)
    }
}

// ---------------------------------------------------------------------------
// Orders of vanishing.

/// Points of the confluence alphabet as polynomials in z (constant, z, z^2
/// coefficients).
fn point_poly(l: Option<Letter>) -> [i64; 3] {
    match l {
        None => [0, 0, 0],                // the boundary point 0
        Some(Letter::E0) => [0, 0, 0],    // the point 0
        Some(Letter::Em1) => [-1, 0, 0],  // the point -1
        Some(Letter::Ez) => [0, 1, 0],    // the point z
        Some(Letter::Emz2) => [0, 0, -1], // the point -z^2
        Some(other) => panic!("letter {other} is not a confluence point"),
    }
}

/// ord_{z=c} of the difference of two points; ord(0) = 0 by convention.
/// Derived by exact root extraction from the polynomial difference, not
/// from a hardcoded table.
pub fn ord_at(p: [i64; 3], q: [i64; 3], c: i64) -> i64 {
    let mut poly = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
    if poly == [0, 0, 0] {
        return 0;
    }
    let mut ord = 0;
    loop {
        let value = poly[0] + poly[1] * c + poly[2] * c * c;
        if value != 0 {
            return ord;
        }
        // Synthetic division by (z - c); the remainder is the value, zero here.
        poly = [poly[1] + c * poly[2], poly[2], 0];
        ord += 1;
        if poly == [0, 0, 0] {
            return ord;
        }
    }
}

/// The derivation `partial_c` on B: delete one letter at a time with the
/// difference of orders of vanishing as coefficient; boundary points are
/// 0 on the left and z on the right.
pub fn partial_c_word(w: &Word, c: i64) -> QSeries {
    assert!(in_b(w), "{w} is not in B");
    let trunc = w.weight().saturating_sub(1);
    let mut out = QSeries::zero(Alphabet::AB, trunc);
    let k = w.weight();
    let point = |i: isize| -> [i64; 3] {
        if i < 0 {
            point_poly(None)
        } else if i as usize >= k {
            point_poly(Some(Letter::Ez))
        } else {
            point_poly(Some(w.letters()[i as usize]))
        }
    };
    for i in 0..k {
        let ii = i as isize;
        let coeff = ord_at(point(ii), point(ii + 1), c) - ord_at(point(ii), point(ii - 1), c);
        if coeff == 0 {
            continue;
        }
        let mut letters = w.letters().to_vec();
        letters.remove(i);
        out.add_term(Word(letters), Q::from_integer(coeff.into()));
    }
    out
}

pub fn partial_c(u: &QSeries, c: i64) -> QSeries {
    assert_eq!(u.alphabet, Alphabet::AB);
    let mut out = QSeries::zero(Alphabet::AB, u.truncation);
    for (w, q) in u.terms() {
        out = out.add(&partial_c_word(w, c).truncated(u.truncation).scale(q));
    }
    out
}

// ---------------------------------------------------------------------------
// The engine.

/// Caches the per-weight data needed by wp, reg_{z->0}, phi, and the
/// relation matrix. Construction requires a varsigma plug-in.
pub struct ConfluenceEngine {
    pub varsigma: Varsigma,
    pub max_weight: usize,
    reg01: Regularizer,
    reg012: Regularizer,
    theta_one_cache: Mutex<HashMap<KTuple, QSeries>>,
    /// weight -> (compositions, images of the star basis under varrho).
    star_basis_cache: Mutex<HashMap<usize, (Vec<KTuple>, Vec<QSeries>)>>,
    /// B' basis word -> its (B'', B''') shuffle-splitting.
    split_cache: Mutex<HashMap<usize, HashMap<Word, Vec<(Word, Word, Q)>>>>,
    /// B' basis word -> reg_{z->0} image.
    regz0_cache: Mutex<HashMap<Word, QSeries>>,
    /// wp on the epsilon-image of a B''' basis word.
    wp_word_cache: Mutex<HashMap<Word, QSeries>>,
}

impl ConfluenceEngine {
    pub fn new(varsigma: Varsigma, max_weight: usize) -> Self {
        ConfluenceEngine {
            varsigma,
            max_weight,
            reg01: Regularizer::new(Alphabet::A01),
            reg012: Regularizer::new(Alphabet::A012),
            theta_one_cache: Mutex::new(HashMap::new()),
            star_basis_cache: Mutex::new(HashMap::new()),
            split_cache: Mutex::new(HashMap::new()),
            regz0_cache: Mutex::new(HashMap::new()),
            wp_word_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn theta_prime(&self, k: &KTuple) -> QSeries {
        let t = self.max_weight;
        dist(&self.reg01.reg(&self.varsigma.apply(&theta(k, t))))
    }

    /// theta_1: theta' plus the distribution corrections for trailing-one
    /// splittings (k', {1}^{2m}).
    pub fn theta_one(&self, k: &KTuple) -> QSeries {
        if let Some(hit) = self.theta_one_cache.lock().unwrap().get(k) {
            return hit.clone();
        }
        let t = self.max_weight;
        let mut acc = self.theta_prime(k);
        let trailing = k.0.iter().rev().take_while(|&&x| x == 1).count();
        for m in 1..=(trailing / 2) {
            let head = KTuple(k.0[..k.depth() - 2 * m].to_vec());
            let mut letters = vec![Letter::Em1];
            letters.extend(std::iter::repeat(Letter::E0).take(2 * m - 1));
            let corr =
                Series::monomial(Alphabet::A012, t, Word(letters), Q::from_integer(2.into()))
                    .shuffle_mul(&self.theta_prime(&head));
            acc = acc.add(&corr);
        }
        self.theta_one_cache
            .lock()
            .unwrap()
            .insert(k.clone(), acc.clone());
        acc
    }

    fn star_basis(&self, weight: usize) -> (Vec<KTuple>, Vec<QSeries>) {
        if let Some(hit) = self.star_basis_cache.lock().unwrap().get(&weight) {
            return hit.clone();
        }
        let ks = compositions(weight);
        let basis: Vec<QSeries> = ks
            .iter()
            .map(|k| varrho(&w_star(k, self.max_weight)))
            .collect();
        let entry = (ks, basis);
        self.star_basis_cache
            .lock()
            .unwrap()
            .insert(weight, entry.clone());
        entry
    }

    /// The map wp on C: decompose in the star basis weightwise and map
    /// basiswise to theta_1.
    pub fn wp(&self, w: &QSeries) -> Result<QSeries, ConfluenceError> {
        assert_eq!(w.alphabet, Alphabet::A01);
        for (word, _) in w.terms() {
            if !in_c(word) {
                return Err(ConfluenceError::NotInSubspace(format!(
                    "{word} is not in C (empty or leading letter 1)"
                )));
            }
        }
        let mut out = QSeries::zero(Alphabet::A012, self.max_weight);
        for weight in 0..=w.max_weight() {
            let slice = w.weight_slice(weight);
            if slice.is_zero() {
                continue;
            }
            if weight == 0 {
                out = out.add(
                    &QSeries::one(Alphabet::A012, self.max_weight).scale(&slice.constant_term()),
                );
                continue;
            }
            let (ks, basis) = self.star_basis(weight);
            let coeffs = decompose_in_basis(&slice, &basis)
                .map_err(|e| ConfluenceError::Decompose(e.to_string()))?;
            for (c, k) in coeffs.iter().zip(&ks) {
                if c.is_zero() {
                    continue;
                }
                out = out.add(&self.theta_one(k).scale(c));
            }
        }
        Ok(out)
    }

    /// wp on the single C-word `epsilon(b''' word)`; cached.
    fn wp_word(&self, cword: &Word) -> Result<QSeries, ConfluenceError> {
        if let Some(hit) = self.wp_word_cache.lock().unwrap().get(cword) {
            return Ok(hit.clone());
        }
        let s = Series::monomial(Alphabet::A01, self.max_weight, cword.clone(), Q::one());
        let img = self.wp(&s)?;
        self.wp_word_cache
            .lock()
            .unwrap()
            .insert(cword.clone(), img.clone());
        Ok(img)
    }

    /// Shuffle-splitting of a B' basis word as a sum of (B'', B''') pairs:
    /// the inverse of `u sh v -> u (x) v`, solved per weight.
    pub fn split_bp_word(&self, w: &Word) -> Vec<(Word, Word, Q)> {
        let weight = w.weight();
        {
            let cache = self.split_cache.lock().unwrap();
            if let Some(by_word) = cache.get(&weight) {
                if let Some(hit) = by_word.get(w) {
                    return hit.clone();
                }
            }
        }
        // Build the pair basis and the square system for this weight.
        let rows = bp_basis(weight);
        let mut pairs: Vec<(Word, Word)> = Vec::new();
        for i in 0..=weight {
            for u in bpp_basis(i) {
                for v in bppp_basis(weight - i) {
                    pairs.push((u.clone(), v));
                }
            }
        }
        assert_eq!(
            pairs.len(),
            rows.len(),
            "B'' x B''' does not match B' in size"
        );
        let row_index: BTreeMap<&Word, usize> =
            rows.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let mut m = QMatrix::zero(rows.len(), pairs.len());
        for (j, (u, v)) in pairs.iter().enumerate() {
            let prod = Series::monomial(Alphabet::AB, weight, u.clone(), Q::one())
                .shuffle_mul(&Series::monomial(Alphabet::AB, weight, v.clone(), Q::one()));
            for (word, c) in prod.terms() {
                let i = *row_index
                    .get(word)
                    .unwrap_or_else(|| panic!("shuffle of B'' and B''' left B': {word}"));
                m[(i, j)] = m[(i, j)].clone() + c.clone();
            }
        }
        // Solve M x = e_row for every row at once via rref of [M | I].
        let n = rows.len();
        let mut aug = QMatrix::zero(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = m[(i, j)].clone();
            }
            aug[(i, n + i)] = Q::one();
        }
        let rref = aug.rref();
        assert_eq!(
            rref.pivots.len(),
            n,
            "B' splitting system is singular at weight {weight} (subspace bug)"
        );
        assert!(rref.pivots.iter().enumerate().all(|(i, &p)| p == i));
        let mut by_word: HashMap<Word, Vec<(Word, Word, Q)>> = HashMap::new();
        for (i, word) in rows.iter().enumerate() {
            let mut splits = Vec::new();
            for (j, (u, v)) in pairs.iter().enumerate() {
                let c = rref.matrix[(j, n + i)].clone();
                if !c.is_zero() {
                    splits.push((u.clone(), v.clone(), c));
                }
            }
            by_word.insert(word.clone(), splits);
        }
        let result = by_word
            .get(w)
            .cloned()
            .expect("requested word is a B' basis word");
        self.split_cache.lock().unwrap().insert(weight, by_word);
        result
    }

    /// reg_{z->0} of a single B word; cached on B' words.
    fn reg_z0_word(&self, w: &Word) -> Result<QSeries, ConfluenceError> {
        if w.letters().contains(&Letter::Em1) {
            return Ok(QSeries::zero(Alphabet::A012, self.max_weight));
        }
        if let Some(hit) = self.regz0_cache.lock().unwrap().get(w) {
            return Ok(hit.clone());
        }
        let mut acc = QSeries::zero(Alphabet::A012, self.max_weight);
        for (u, v, c) in self.split_bp_word(w) {
            // dist(bar-reg(u)) sh wp(epsilon(v))
            let bar: Word = Word(
                u.letters()
                    .iter()
                    .map(|&l| match l {
                        Letter::E0 | Letter::Emz2 => Letter::E0,
                        Letter::Ez => Letter::E1,
                        other => panic!("letter {other} in B''"),
                    })
                    .collect(),
            );
            let eps: Word = Word(
                v.letters()
                    .iter()
                    .map(|&l| match l {
                        Letter::E0 => Letter::E0,
                        Letter::Emz2 => Letter::E1,
                        other => panic!("letter {other} in B'''"),
                    })
                    .collect(),
            );
            let left = dist(&Series::monomial(
                Alphabet::A01,
                self.max_weight,
                bar,
                Q::one(),
            ));
            let right = self.wp_word(&eps)?;
            acc = acc.add(&left.shuffle_mul(&right).scale(&c));
        }
        self.regz0_cache
            .lock()
            .unwrap()
            .insert(w.clone(), acc.clone());
        Ok(acc)
    }

    /// reg_{z->0} on B: kill words containing e-1, split B' as B'' sh B''',
    /// and push through dist and wp.
    pub fn reg_z0(&self, u: &QSeries) -> Result<QSeries, ConfluenceError> {
        assert_eq!(u.alphabet, Alphabet::AB);
        for (w, _) in u.terms() {
            if !in_b(w) {
                return Err(ConfluenceError::NotInSubspace(format!("{w} is not in B")));
            }
        }
        let mut acc = QSeries::zero(Alphabet::A012, self.max_weight);
        for (w, c) in u.terms() {
            acc = acc.add(&self.reg_z0_word(w)?.scale(c));
        }
        Ok(acc)
    }

    /// The map phi: the sum over derivation chains of
    /// `reg_{z->0}(chain image) sh reg(e_{c_1}...e_{c_l})`.
    pub fn phi(&self, u: &QSeries) -> Result<QSeries, ConfluenceError> {
        assert_eq!(u.alphabet, Alphabet::AB);
        for (w, _) in u.terms() {
            if !in_b(w) {
                return Err(ConfluenceError::NotInSubspace(format!("{w} is not in B")));
            }
        }
        let mut acc = QSeries::zero(Alphabet::A012, self.max_weight);
        // DFS over c-sequences; a new derivation acts on the outside and its
        // letter lands at the front of the sequence word.
        let mut stack: Vec<(QSeries, Word)> = vec![(u.clone(), Word::empty())];
        while let Some((image, seq)) = stack.pop() {
            let factor = self.reg012.reg_word(&seq).with_truncation(self.max_weight);
            if !factor.is_zero() {
                let left = self.reg_z0(&image)?;
                if !left.is_zero() {
                    acc = acc.add(&left.shuffle_mul(&factor));
                }
            }
            if image.max_weight() == 0 {
                continue;
            }
            for (c, letter) in [(0i64, Letter::E0), (1, Letter::E1), (-1, Letter::Em1)] {
                let next = partial_c(&image, c);
                if next.is_zero() {
                    continue;
                }
                let mut letters = vec![letter];
                letters.extend_from_slice(seq.letters());
                stack.push((next, Word(letters)));
            }
        }
        Ok(acc)
    }

    /// One confluence relation: `u|_{z->1} - phi(u)`.
    pub fn icf_element(&self, u: &QSeries) -> Result<QSeries, ConfluenceError> {
        Ok(z_to_one(u).sub(&self.phi(u)?))
    }

    pub fn icf_element_word(&self, w: &Word) -> Result<QSeries, ConfluenceError> {
        self.icf_element(&Series::monomial(
            Alphabet::AB,
            self.max_weight,
            w.clone(),
            Q::one(),
        ))
    }

    /// The relation matrix at one weight: rows indexed by the B basis,
    /// columns labelled by admissible words.
    pub fn icf_matrix(&self, weight: usize) -> Result<(QMatrix, Vec<Word>), ConfluenceError> {
        assert!(weight >= 1);
        let cols = admissible_basis(weight);
        let col_index: BTreeMap<&Word, usize> =
            cols.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let sources = b_basis(weight);
        let mut m = QMatrix::zero(sources.len(), cols.len());
        for (i, src) in sources.iter().enumerate() {
            let rel = self.icf_element_word(src)?;
            for (w, c) in rel.terms() {
                let j = *col_index
                    .get(w)
                    .unwrap_or_else(|| panic!("relation term {w} is not admissible"));
                m[(i, j)] = c.clone();
            }
        }
        Ok((m.with_labels(cols), sources))
    }
}

/// Numeric cross-check of the identity relating `reg o varsigma`
/// and `wp` on the C subspace, in two readings: as literally quoted
/// (`L(reg(vs(w))) = L(wp(w))`) and with the extra varrho twist
/// (`L(reg(varrho(vs(w)))) = L(wp(w))`) that the proof chains actually
/// consume. Report-only: with the shipped identity transcription the
/// literal reading fails while the twisted one holds, which is evidence the
/// quoted statement and the quoted theta normalization come from different
/// conventions; the annihilation gate is the arbiter either way.
pub fn lm_eq_wp_residuals(
    varsigma: &Varsigma,
    oracle: &crate::zoracle::EulerOracle,
    max_weight: usize,
) -> Result<(f64, f64), String> {
    use crate::series::Coeff;
    let engine = ConfluenceEngine::new(varsigma.clone(), max_weight);
    let reg = Regularizer::new(Alphabet::A01);
    let mut literal: f64 = 0.0;
    let mut twisted: f64 = 0.0;
    for weight in 1..=max_weight {
        for w in words_of_weight(Alphabet::A01, weight) {
            if !in_c(&w) {
                continue;
            }
            let s = Series::monomial(Alphabet::A01, max_weight, w, crate::rational::q_int(1));
            let rhs = oracle
                .eval_combo(&engine.wp(&s).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let img = varsigma.apply(&s);
            for (acc, lhs_series) in [
                (&mut literal, reg.reg(&img)),
                (&mut twisted, reg.reg(&varrho(&img))),
            ] {
                // dist preserves values, so the level-1 evaluation suffices.
                let lhs = oracle
                    .eval_combo(&dist(&lhs_series))
                    .map_err(|e| e.to_string())?;
                *acc = acc.max(lhs.add(&rhs.neg()).abs_f64());
            }
        }
    }
    Ok((literal, twisted))
}

/// Numeric arbitration of a varsigma candidate: the largest |L| over the
/// relation family up to `max_weight`. A correct transcription annihilates
/// every relation to oracle accuracy; a wrong one shows O(1) residuals.
pub fn varsigma_annihilation_residual(
    varsigma: &Varsigma,
    oracle: &crate::zoracle::EulerOracle,
    max_weight: usize,
) -> Result<f64, String> {
    let engine = ConfluenceEngine::new(varsigma.clone(), max_weight);
    let mut worst: f64 = 0.0;
    for weight in 1..=max_weight {
        for src in b_basis(weight) {
            let rel = engine.icf_element_word(&src).map_err(|e| e.to_string())?;
            let v = oracle.eval_combo(&rel).map_err(|e| e.to_string())?;
            worst = worst.max(v.abs_f64());
        }
    }
    Ok(worst)
}

/// Expected dimension of the weight-w admissible space: 1, then 4*3^(w-2).
pub fn admissible_dim(weight: usize) -> usize {
    match weight {
        0 => 1,
        1 => 1,
        w => 4 * 3usize.pow(w as u32 - 2),
    }
}

/// The Fibonacci-type dimension sequence d_w of the level-2 period space:
/// d_0 = d_1 = 1, d_w = d_{w-1} + d_{w-2}.
pub fn period_dim(weight: usize) -> usize {
    let (mut a, mut b) = (1usize, 1usize);
    for _ in 0..weight {
        let next = a + b;
        a = b;
        b = next;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q_int, q_ratio};

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn mono(alpha: Alphabet, t: usize, s: &str) -> QSeries {
        Series::monomial(alpha, t, w(s), Q::one())
    }

    fn engine() -> ConfluenceEngine {
        ConfluenceEngine::new(Varsigma::identity(), 6)
    }

    #[test]
    fn varrho_examples() {
        let e0 = mono(Alphabet::A01, 4, "0");
        let img = varrho(&e0);
        assert_eq!(img.coefficient(&w("0")), q_int(1));
        assert_eq!(img.coefficient(&w("1")), q_int(-1));
        // Multiplicativity: varrho(e1 e0) = -e1 e0 + e1 e1.
        let img2 = varrho(&mono(Alphabet::A01, 4, "1,0"));
        assert_eq!(img2.coefficient(&w("1,0")), q_int(-1));
        assert_eq!(img2.coefficient(&w("1,1")), q_int(1));
        // Involution.
        assert_eq!(varrho(&varrho(&e0)), e0);
    }

    #[test]
    fn dist_examples() {
        let img = dist(&mono(Alphabet::A01, 4, "1,0"));
        assert_eq!(img.coefficient(&w("1,0")), q_int(2));
        assert_eq!(img.coefficient(&w("-1,0")), q_int(2));
        assert_eq!(
            dist(&QSeries::one(Alphabet::A01, 4)),
            QSeries::one(Alphabet::A012, 4)
        );
        assert_eq!(
            dist(&mono(Alphabet::A01, 4, "0,0")).coefficient(&w("0,0")),
            q_int(4)
        );
    }

    #[test]
    fn star_and_theta_examples() {
        assert_eq!(w_star(&KTuple(vec![]), 4), QSeries::one(Alphabet::A01, 4));
        assert_eq!(theta(&KTuple(vec![]), 4), QSeries::one(Alphabet::A01, 4));
        let t2 = theta(&KTuple(vec![2]), 4);
        assert_eq!(t2.coefficient(&w("1,0")), q_int(-1));
        assert_eq!(t2.num_terms(), 1);
        let t11 = theta(&KTuple(vec![1, 1]), 4);
        assert_eq!(t11.coefficient(&w("1,1")), q_int(1));
        assert_eq!(t11.num_terms(), 1);
    }

    #[test]
    fn star_basis_spans_c() {
        // varrho(w_star(2)) = e1e0 - e1e1, varrho(w_star(1,1)) = e1e0.
        let a = varrho(&w_star(&KTuple(vec![2]), 4));
        assert_eq!(a.coefficient(&w("1,0")), q_int(1));
        assert_eq!(a.coefficient(&w("1,1")), q_int(-1));
        let b = varrho(&w_star(&KTuple(vec![1, 1]), 4));
        assert_eq!(b.coefficient(&w("1,0")), q_int(1));
        assert_eq!(b.num_terms(), 1);
    }

    #[test]
    fn wp_defining_equation() {
        let eng = engine();
        for k in [KTuple(vec![2]), KTuple(vec![1, 1]), KTuple(vec![2, 1])] {
            let lhs = eng.wp(&varrho(&w_star(&k, 6))).unwrap();
            assert_eq!(
                lhs,
                eng.theta_one(&k),
                "wp(varrho(w_star{k})) != theta_1{k}"
            );
        }
        // wp(1) = 1.
        assert_eq!(
            eng.wp(&QSeries::one(Alphabet::A01, 6)).unwrap(),
            QSeries::one(Alphabet::A012, 6)
        );
        // theta_1(1,1) carries the distribution correction 2 e-1 e0.
        let t11 = eng.theta_one(&KTuple(vec![1, 1]));
        assert_eq!(t11.coefficient(&w("-1,0")), q_int(2));
    }

    #[test]
    fn wp_rejects_non_c_input() {
        let eng = engine();
        assert!(eng.wp(&mono(Alphabet::A01, 6, "0,1")).is_err());
    }

    #[test]
    fn ord_table_entries() {
        // ord_{z=-1}(-1 - z) = 1, ord at the other points 0.
        let m1 = point_poly(Some(Letter::Em1));
        let zz = point_poly(Some(Letter::Ez));
        assert_eq!(ord_at(m1, zz, -1), 1);
        assert_eq!(ord_at(m1, zz, 0), 0);
        assert_eq!(ord_at(m1, zz, 1), 0);
        // ord_{z=0}(0 - (-z^2)) = 2.
        let zero = point_poly(Some(Letter::E0));
        let mz2 = point_poly(Some(Letter::Emz2));
        assert_eq!(ord_at(zero, mz2, 0), 2);
        // Identical points: the convention ord(0) = 0.
        assert_eq!(ord_at(zero, zero, 0), 0);
    }

    #[test]
    fn partial_c_examples() {
        // d_{-1}(e-1) = empty word with coefficient +1.
        let d = partial_c_word(&w("-1"), -1);
        assert_eq!(d.constant_term(), q_int(1));
        assert_eq!(d.num_terms(), 1);
        // d_c(e_z e_0) = 0 for every c.
        for c in [-1, 0, 1] {
            assert!(partial_c_word(&w("z,0"), c).is_zero());
        }
        // d_0(e_{-z^2}) = -1 via ord_{z=0}(z^2) = 2.
        let d0 = partial_c_word(&w("-z2"), 0);
        assert_eq!(d0.constant_term(), q_int(-1));
        // Weight drops by one on a longer word, all c.
        for c in [-1, 0, 1] {
            let img = partial_c_word(&w("-1,0,z,0"), c);
            for (word, _) in img.terms() {
                assert_eq!(word.weight(), 3);
            }
        }
    }

    #[test]
    fn reg_z0_examples() {
        let eng = engine();
        // e_z e_0 is a pure B'' word: image dist(e1 e0).
        let img = eng.reg_z0(&mono(Alphabet::AB, 6, "z,0")).unwrap();
        assert_eq!(img.coefficient(&w("1,0")), q_int(2));
        assert_eq!(img.coefficient(&w("-1,0")), q_int(2));
        assert_eq!(img.num_terms(), 2);
        // e-1 dies at the first arrow.
        assert!(eng.reg_z0(&mono(Alphabet::AB, 6, "-1")).unwrap().is_zero());
        // The empty word maps to 1.
        assert_eq!(
            eng.reg_z0(&QSeries::one(Alphabet::AB, 6)).unwrap(),
            QSeries::one(Alphabet::A012, 6)
        );
    }

    #[test]
    fn split_recombines() {
        let eng = engine();
        for weight in 1..=5 {
            for word in bp_basis(weight) {
                let splits = eng.split_bp_word(&word);
                let mut acc = QSeries::zero(Alphabet::AB, weight);
                for (u, v, c) in splits {
                    let prod = Series::monomial(Alphabet::AB, weight, u, Q::one())
                        .shuffle_mul(&Series::monomial(Alphabet::AB, weight, v, Q::one()));
                    acc = acc.add(&prod.scale(&c));
                }
                assert_eq!(
                    acc,
                    Series::monomial(Alphabet::AB, weight, word.clone(), Q::one())
                );
            }
        }
    }

    #[test]
    fn phi_examples() {
        let eng = engine();
        // phi(e-1) = e-1: only the single l=1, c=-1 chain survives.
        let img = eng.phi(&mono(Alphabet::AB, 6, "-1")).unwrap();
        assert_eq!(img.coefficient(&w("-1")), q_int(1));
        assert_eq!(img.num_terms(), 1);
        // phi(e_z e_0) = reg_z0(e_z e_0): all derivations vanish.
        let img = eng.phi(&mono(Alphabet::AB, 6, "z,0")).unwrap();
        assert_eq!(img.coefficient(&w("1,0")), q_int(2));
        assert_eq!(img.coefficient(&w("-1,0")), q_int(2));
        // phi(1) = 1.
        assert_eq!(
            eng.phi(&QSeries::one(Alphabet::AB, 6)).unwrap(),
            QSeries::one(Alphabet::A012, 6)
        );
    }

    #[test]
    fn icf_examples() {
        let eng = engine();
        assert!(eng.icf_element_word(&w("-1")).unwrap().is_zero());
        let rel = eng.icf_element_word(&w("z,0")).unwrap();
        assert_eq!(rel.coefficient(&w("1,0")), q_int(-1));
        assert_eq!(rel.coefficient(&w("-1,0")), q_int(-2));
        assert_eq!(rel.num_terms(), 2);
    }

    #[test]
    fn icf_matrix_small_ranks() {
        let eng = engine();
        let (m1, _) = eng.icf_matrix(1).unwrap();
        assert_eq!(m1.rank(), 0);
        let (m2, src2) = eng.icf_matrix(2).unwrap();
        assert_eq!(src2.len(), 9);
        assert_eq!(m2.cols, 4);
        assert_eq!(m2.rank(), 2);
    }

    #[test]
    fn every_relation_is_admissible() {
        let eng = engine();
        for weight in 1..=3 {
            for src in b_basis(weight) {
                let rel = eng.icf_element_word(&src).unwrap();
                for (word, _) in rel.terms() {
                    assert!(word.is_admissible(), "{word} from source {src}");
                    assert_eq!(word.weight(), weight);
                }
            }
        }
    }

    #[test]
    fn dimension_helpers() {
        assert_eq!(
            (1..=6).map(admissible_dim).collect::<Vec<_>>(),
            vec![1, 4, 12, 36, 108, 324]
        );
        assert_eq!(
            (1..=6).map(period_dim).collect::<Vec<_>>(),
            vec![1, 2, 3, 5, 8, 13]
        );
    }

    #[test]
    fn varsigma_json_round_trip() {
        let text = r#"{
            "name": "custom",
            "anti": true,
            "e0": [{"word": "0", "coeff": "1"}],
            "e1": [{"word": "1", "coeff": "1"}, {"word": "0", "coeff": "-1/2"}]
        }"#;
        let vs = Varsigma::from_json_str(text).unwrap();
        assert!(vs.anti);
        let img = vs.apply(&mono(Alphabet::A01, 4, "0,1"));
        // Anti: image of e0e1 is sigma(e1) sigma(e0) = (e1 - e0/2) e0.
        assert_eq!(img.coefficient(&w("1,0")), q_int(1));
        assert_eq!(img.coefficient(&w("0,0")), q_ratio(-1, 2));
    }

    #[test]
    fn theta_one_trailing_corrections() {
        let eng = engine();
        // (1,1,1,1) splits with m = 1 (head (1,1)) and m = 2 (head ()).
        let t = eng.theta_one(&KTuple(vec![1, 1, 1, 1]));
        // The m = 2 correction contributes 2 e-1 e0 e0 e0.
        assert_eq!(t.coefficient(&w("-1,0,0,0")), q_int(2));
    }
}
