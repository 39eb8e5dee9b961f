//! The dual-space engine over the four-strand braid-type algebra at level 2:
//! substitution morphisms, configuration symbols with their dlog form
//! tables, the letter-deleting recursion behind the pairing
//! `<series, psi(symbol)>`, and the random-point wedge-vanishing check.
//!
//! Form vectors live over the basis `L(i) = dlog z_i` and
//! `M(a,{i,j}) = dlog(z_i - (-1)^a z_j)`; the basis element dual to the
//! generator `t(a)^{ij}` is `M(a,{i,j})` and the one dual to `t^{1i}` is
//! `L(i)`. The two built-in configuration tables are the embeddings used
//! for the pentagon pairing lemmas: `iota` with points
//! {0, 1, -z4/z3, z2/z3} and `kappa` with points
//! {0, 1, (z3-z4)/(z3+z4), (z3+z4)/(z3-z4), (z3-z2)/(z3+z2)}.

use crate::rational::{q_int, Q};
use crate::series::{Coeff, QSeries, Series};
use crate::word::{Alphabet, Generator, Letter, Word};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

// ---------------------------------------------------------------------------
// Form vectors.

/// Basis 1-forms of the level-2 arrangement on (z2, z3, z4).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum FormBasis {
    /// dlog z_i
    L(u8),
    /// dlog(z_i - (-1)^a z_j), i < j
    M(u8, u8, u8),
}

impl FormBasis {
    fn m(a: u8, i: u8, j: u8) -> Self {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        FormBasis::M(a, i, j)
    }

    /// The generator this basis form is dual to.
    fn generator(&self) -> Generator {
        match *self {
            FormBasis::L(i) => Generator::t1(i),
            FormBasis::M(a, i, j) => Generator::t(a, i, j),
        }
    }
}

/// Sparse rational vector over the form basis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FormVector(pub BTreeMap<FormBasis, Q>);

impl FormVector {
    pub fn zero() -> Self {
        FormVector(BTreeMap::new())
    }

    fn from_terms(terms: &[(FormBasis, i64)]) -> Self {
        let mut m: BTreeMap<FormBasis, Q> = BTreeMap::new();
        for &(b, c) in terms {
            if c != 0 {
                *m.entry(b).or_insert_with(Q::zero) += q_int(c);
            }
        }
        m.retain(|_, v| !v.is_zero());
        FormVector(m)
    }

    pub fn coeff(&self, b: FormBasis) -> Q {
        self.0.get(&b).cloned().unwrap_or_else(Q::zero)
    }

    /// Pairing with a rational combination of degree-1 generators.
    pub fn pair_series(&self, s: &QSeries) -> Q {
        let mut acc = Q::zero();
        for (w, c) in s.terms() {
            assert_eq!(w.weight(), 1, "degree-1 combination expected");
            let Letter::Gen(g) = w.letters()[0] else {
                panic!("generator expected")
            };
            let b = match g {
                Generator::T1(i) => FormBasis::L(i),
                Generator::T(a, i, j) => FormBasis::M(a, i, j),
            };
            acc += self.coeff(b) * c;
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Configuration tables and symbols.

/// Which built-in point configuration a symbol lives on.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum TableKind {
    Iota,
    Kappa,
}

impl TableKind {
    pub fn point_count(&self) -> u8 {
        match self {
            TableKind::Iota => 4,
            TableKind::Kappa => 5,
        }
    }

    pub fn point_name(&self, p: u8) -> &'static str {
        match (self, p) {
            (_, 0) => "0",
            (_, 1) => "1",
            (TableKind::Iota, 2) => "z",
            (TableKind::Iota, 3) => "w",
            (TableKind::Kappa, 2) => "-z",
            (TableKind::Kappa, 3) => "-1/z",
            (TableKind::Kappa, 4) => "w",
            _ => panic!("point index out of range"),
        }
    }

    fn end_point(&self) -> u8 {
        match self {
            TableKind::Iota => 3,
            TableKind::Kappa => 4,
        }
    }

    /// dlog of the difference of two table points, as form data. Entries
    /// follow the embeddings' dlog lists; `dlog_table_sanity` re-derives
    /// every entry from the rational point functions.
    pub fn dlog(&self, p: u8, q: u8) -> FormVector {
        use FormBasis::L;
        let m = FormBasis::m;
        if p == q {
            return FormVector::zero();
        }
        let (a, b) = if p < q { (p, q) } else { (q, p) };
        let terms: &[(FormBasis, i64)] = match (self, a, b) {
            (TableKind::Iota, 0, 1) => &[],
            (TableKind::Iota, 0, 2) => &[(L(4), 1), (L(3), -1)],
            (TableKind::Iota, 0, 3) => &[(L(2), 1), (L(3), -1)],
            (TableKind::Iota, 1, 2) => &[(m(1, 3, 4), 1), (L(3), -1)],
            (TableKind::Iota, 1, 3) => &[(m(0, 2, 3), 1), (L(3), -1)],
            (TableKind::Iota, 2, 3) => &[(m(1, 2, 4), 1), (L(3), -1)],
            (TableKind::Kappa, 0, 1) => &[],
            (TableKind::Kappa, 0, 2) => &[(m(0, 3, 4), 1), (m(1, 3, 4), -1)],
            (TableKind::Kappa, 0, 3) => &[(m(1, 3, 4), 1), (m(0, 3, 4), -1)],
            (TableKind::Kappa, 0, 4) => &[(m(0, 2, 3), 1), (m(1, 2, 3), -1)],
            (TableKind::Kappa, 1, 2) => &[(L(4), 1), (m(1, 3, 4), -1)],
            (TableKind::Kappa, 1, 3) => &[(L(4), 1), (m(0, 3, 4), -1)],
            (TableKind::Kappa, 1, 4) => &[(L(2), 1), (m(1, 2, 3), -1)],
            (TableKind::Kappa, 2, 3) => &[(L(3), 1), (L(4), 1), (m(1, 3, 4), -1), (m(0, 3, 4), -1)],
            (TableKind::Kappa, 2, 4) => &[
                (L(3), 1),
                (m(0, 2, 4), 1),
                (m(1, 2, 3), -1),
                (m(1, 3, 4), -1),
            ],
            (TableKind::Kappa, 3, 4) => &[
                (L(3), 1),
                (m(1, 2, 4), 1),
                (m(1, 2, 3), -1),
                (m(0, 3, 4), -1),
            ],
            _ => panic!("point index out of range"),
        };
        FormVector::from_terms(terms)
    }
}

/// A formal iterated-integral symbol over one of the configuration tables;
/// `points[0]` and `points[last]` are the fixed endpoints.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ConfigSymbol {
    pub kind: TableKind,
    pub points: Vec<u8>,
}

impl ConfigSymbol {
    pub fn new(kind: TableKind, interior: Vec<u8>) -> Self {
        let mut points = vec![0u8];
        points.extend(interior);
        points.push(kind.end_point());
        for &p in &points {
            assert!(p < kind.point_count(), "point index out of range");
        }
        ConfigSymbol { kind, points }
    }

    /// Number of interior points.
    pub fn depth(&self) -> usize {
        self.points.len() - 2
    }

    fn delete(&self, index: usize) -> ConfigSymbol {
        let mut points = self.points.clone();
        points.remove(index);
        ConfigSymbol {
            kind: self.kind,
            points,
        }
    }
}

impl std::fmt::Display for ConfigSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<&str> = self
            .points
            .iter()
            .map(|&p| self.kind.point_name(p))
            .collect();
        write!(
            f,
            "I({}; {}; {})",
            names[0],
            names[1..names.len() - 1].join(","),
            names[names.len() - 1]
        )
    }
}

/// The embedding of words over {0,1,z}: letters map to the points
/// 0, 1, z; endpoints 0 and w.
pub fn embed_f(u: &Word) -> ConfigSymbol {
    let interior = u
        .letters()
        .iter()
        .map(|l| match l {
            Letter::E0 => 0u8,
            Letter::E1 => 1,
            Letter::Ez => 2,
            other => panic!("letter {other} outside the 0,1,z alphabet"),
        })
        .collect();
    ConfigSymbol::new(TableKind::Iota, interior)
}

/// The embedding of words over {0,-1,z,-z2} through a -> a/z: letters map
/// to the points 0, -1/z, 1, -z.
pub fn embed_g(u: &Word) -> ConfigSymbol {
    let interior = u
        .letters()
        .iter()
        .map(|l| match l {
            Letter::E0 => 0u8,
            Letter::Em1 => 3,
            Letter::Ez => 1,
            Letter::Emz2 => 2,
            other => panic!("letter {other} outside the 0,-1,z,-z2 alphabet"),
        })
        .collect();
    ConfigSymbol::new(TableKind::Kappa, interior)
}

/// `partial^{(s)}`: delete one interior point at a time; the coefficient is
/// the signed pairing of `s` with the dlog of the difference to a neighbor.
pub fn partial_s(s: &QSeries, sym: &ConfigSymbol) -> Vec<(ConfigSymbol, Q)> {
    let mut out = Vec::new();
    for i in 1..sym.points.len() - 1 {
        let mut coeff = Q::zero();
        for (nb, sign) in [(i + 1, 1i64), (i - 1, -1i64)] {
            if sym.points[nb] == sym.points[i] {
                continue;
            }
            let fv = sym.kind.dlog(sym.points[nb], sym.points[i]);
            coeff += fv.pair_series(s) * q_int(sign);
        }
        if !coeff.is_zero() {
            out.push((sym.delete(i), coeff));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// The pairing.

/// Memoizing expander of symbols into dual word vectors over the
/// generator alphabet.
pub struct PsiExpander {
    memo: Mutex<HashMap<ConfigSymbol, QSeries>>,
}

impl Default for PsiExpander {
    fn default() -> Self {
        Self::new()
    }
}

impl PsiExpander {
    pub fn new() -> Self {
        PsiExpander {
            memo: Mutex::new(HashMap::new()),
        }
    }

    /// The dual word vector of `psi(sym)`: a sum of generator words
    /// `g_1 ... g_k` in consumption order (`g_1` acts first) whose dot
    /// product with a series' monomial coefficients is the pairing.
    pub fn psi_star(&self, sym: &ConfigSymbol) -> QSeries {
        if let Some(hit) = self.memo.lock().unwrap().get(sym) {
            return hit.clone();
        }
        let k = sym.depth();
        let result = if k == 0 {
            QSeries::one(Alphabet::T42, 0)
        } else {
            let mut acc = QSeries::zero(Alphabet::T42, k);
            for i in 1..sym.points.len() - 1 {
                for (nb, sign) in [(i + 1, 1i64), (i - 1, -1i64)] {
                    if sym.points[nb] == sym.points[i] {
                        continue;
                    }
                    let fv = sym.kind.dlog(sym.points[nb], sym.points[i]);
                    if fv.0.is_empty() {
                        continue;
                    }
                    let tail = self.psi_star(&sym.delete(i)).with_truncation(k);
                    for (basis, c) in &fv.0 {
                        let head =
                            Series::from_letter(Alphabet::T42, k, Letter::Gen(basis.generator()));
                        acc = acc.add(&head.concat_mul(&tail).scale(&(c * q_int(sign))));
                    }
                }
            }
            acc
        };
        self.memo
            .lock()
            .unwrap()
            .insert(sym.clone(), result.clone());
        result
    }

    /// `<phi, psi(sym)>`: dot the dual word vector against the degree-k
    /// slice of `phi` (the first-consumed generator is the leftmost
    /// monomial factor, which is the reversed-pairing convention).
    pub fn pair_dual<C: Coeff>(&self, phi: &Series<C>, sym: &ConfigSymbol) -> C {
        assert!(
            phi.truncation >= sym.depth(),
            "series truncation below symbol depth"
        );
        let dual = self.psi_star(sym);
        let mut acc = C::zero();
        for (w, q) in dual.terms() {
            let c = phi.pair(&w.reversed());
            if !c.is_zero() {
                acc = acc.add(&c.mul(&C::from_q(q)));
            }
        }
        acc
    }
}

/// Literal left-recursion evaluation of the same pairing; the internal
/// oracle for `PsiExpander::pair_dual`.
pub fn pair_dual_recursive<C: Coeff>(phi: &Series<C>, sym: &ConfigSymbol) -> C {
    if sym.depth() == 0 {
        return phi.constant_term();
    }
    let mut acc = C::zero();
    for letter in Alphabet::T42.letters() {
        let quot = phi.left_quotient(letter);
        if quot.is_zero() {
            continue;
        }
        let s = Series::<Q>::from_letter(Alphabet::T42, 1, letter);
        for (sub, coeff) in partial_s(&s, sym) {
            let inner = pair_dual_recursive(&quot, &sub);
            if !inner.is_zero() {
                acc = acc.add(&inner.mul(&C::from_q(&coeff)));
            }
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Substitutions.

/// The named substitution morphisms of the pentagon calculus.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SubstSpec {
    /// h^{1,2,3} = h(t12, t+23, t-23)
    H123,
    /// h^{1,2,34} = h(t12, t+23 + t+24, t-23 + t-24)
    H12_34,
    /// h^{12,3,4} = h(t13 + t+23 + t-23, t+34, t-34)
    H12_3_4,
    /// h^{1,23,4} = h(t12 + t13 + t+23 + t-23, t+24 + t+34, t-24 + t-34)
    H1_23_4,
    /// delta(h)^{2,3,4} = h(t+23, t+34, 0)
    Delta234,
    /// T(h^{1,2,3}) = h(t+23, t12, -t12 - t+23 - t-23)
    TH123,
    /// T(h^{1,2,34}) = h(t+23 + t+24, t12, -t12 - t+23 - t+24 - t-23 - t-24)
    TH12_34,
    /// T(h^{12,3,4}) = h(t+34, t13 + t+23 + t-23,
    ///                   -t13 - t+23 - t-23 - t+34 - t-34)
    TH12_3_4,
}

impl SubstSpec {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "1,2,3" => Some(SubstSpec::H123),
            "1,2,34" => Some(SubstSpec::H12_34),
            "12,3,4" => Some(SubstSpec::H12_3_4),
            "1,23,4" => Some(SubstSpec::H1_23_4),
            "delta:2,3,4" => Some(SubstSpec::Delta234),
            "T:1,2,3" => Some(SubstSpec::TH123),
            "T:1,2,34" => Some(SubstSpec::TH12_34),
            "T:12,3,4" => Some(SubstSpec::TH12_3_4),
            _ => None,
        }
    }

    /// Images of (e0, e1, e-1) as signed generator sums.
    fn images(&self) -> [Vec<(Generator, i64)>; 3] {
        use Generator as G;
        let t12 = || (G::t1(2), 1);
        let t13 = || (G::t1(3), 1);
        let tp = |i, j| (G::t(0, i, j), 1);
        let tm = |i, j| (G::t(1, i, j), 1);
        let neg = |v: Vec<(G, i64)>| v.into_iter().map(|(g, c)| (g, -c)).collect::<Vec<_>>();
        match self {
            SubstSpec::H123 => [vec![t12()], vec![tp(2, 3)], vec![tm(2, 3)]],
            SubstSpec::H12_34 => [
                vec![t12()],
                vec![tp(2, 3), tp(2, 4)],
                vec![tm(2, 3), tm(2, 4)],
            ],
            SubstSpec::H12_3_4 => [
                vec![t13(), tp(2, 3), tm(2, 3)],
                vec![tp(3, 4)],
                vec![tm(3, 4)],
            ],
            SubstSpec::H1_23_4 => [
                vec![t12(), t13(), tp(2, 3), tm(2, 3)],
                vec![tp(2, 4), tp(3, 4)],
                vec![tm(2, 4), tm(3, 4)],
            ],
            SubstSpec::Delta234 => [vec![tp(2, 3)], vec![tp(3, 4)], vec![]],
            SubstSpec::TH123 => [
                vec![tp(2, 3)],
                vec![t12()],
                neg(vec![t12(), tp(2, 3), tm(2, 3)]),
            ],
            SubstSpec::TH12_34 => [
                vec![tp(2, 3), tp(2, 4)],
                vec![t12()],
                neg(vec![t12(), tp(2, 3), tp(2, 4), tm(2, 3), tm(2, 4)]),
            ],
            SubstSpec::TH12_3_4 => [
                vec![tp(3, 4)],
                vec![t13(), tp(2, 3), tm(2, 3)],
                neg(vec![t13(), tp(2, 3), tm(2, 3), tp(3, 4), tm(3, 4)]),
            ],
        }
    }
}

/// A signed sum of degree-1 generators as a series.
pub fn generator_sum<C: Coeff>(terms: &[(Generator, i64)], trunc: usize) -> Series<C> {
    let mut s = Series::zero(Alphabet::T42, trunc);
    for &(g, c) in terms {
        s.add_term(Word::single(Letter::Gen(g)), C::from_q(&q_int(c)));
    }
    s
}

/// Substitute the three letters of a level-2 series by the named degree-1
/// images, expanding monomials with concatenation in order.
pub fn subst<C: Coeff>(h: &Series<C>, spec: SubstSpec) -> Series<C> {
    assert_eq!(h.alphabet, Alphabet::A012);
    let t = h.truncation;
    let imgs = spec.images();
    let images: BTreeMap<Letter, Series<C>> = [
        (Letter::E0, generator_sum(&imgs[0], t)),
        (Letter::E1, generator_sum(&imgs[1], t)),
        (Letter::Em1, generator_sum(&imgs[2], t)),
    ]
    .into_iter()
    .collect();
    h.substitute(Alphabet::T42, &images, false)
}

/// A partially defined index map {1..4} -> {1,2,3} with f(1) = 1, given by
/// its fibers. Indices absent from every fiber are undefined.
#[derive(Clone, Debug)]
pub struct IndexMap {
    pub fibers: [Vec<u8>; 3],
}

#[derive(thiserror::Error, Debug)]
pub enum SubstError {
    #[error("malformed index map: {0}")]
    Malformed(String),
}

impl IndexMap {
    pub fn new(fibers: [Vec<u8>; 3]) -> Result<Self, SubstError> {
        if !fibers[0].contains(&1) {
            return Err(SubstError::Malformed("f(1) = 1 is required".into()));
        }
        let mut seen = Vec::new();
        for f in &fibers {
            for &x in f {
                if !(1..=4).contains(&x) {
                    return Err(SubstError::Malformed(format!("index {x} out of range")));
                }
                if seen.contains(&x) {
                    return Err(SubstError::Malformed(format!("index {x} in two fibers")));
                }
                seen.push(x);
            }
        }
        Ok(IndexMap { fibers })
    }
}

/// The generic substitution rule on the three-strand generators:
/// `(t(a)^{ij})^f` sums over the fibers of i and j; `(t^{12})^f` adds the
/// half-sum of twists inside the fiber of 2 (ordered pairs collapse onto
/// canonical generators, absorbing the 1/2) and the cross terms with the
/// fiber of 1. The twist index on the cross term is unbound in the source
/// rule and is summed over Z/2; it is empty whenever f^{-1}(1) = {1},
/// which covers every map the pentagon uses.
pub fn subst_generic(h: &QSeries, f: &IndexMap) -> QSeries {
    assert_eq!(h.alphabet, Alphabet::A012);
    let t = h.truncation;
    let fib = |i: usize| -> &[u8] { &f.fibers[i - 1] };

    let twist_image = |a: u8| -> Vec<(Generator, i64)> {
        let mut v = Vec::new();
        for &i in fib(2) {
            for &j in fib(3) {
                v.push((Generator::t(a, i, j), 1));
            }
        }
        v
    };
    let mut strand = Vec::new();
    for &j in fib(2) {
        strand.push((Generator::t1(j), 1));
    }
    for (idx, &j1) in fib(2).iter().enumerate() {
        for &j2 in &fib(2)[idx + 1..] {
            for a in 0..2u8 {
                strand.push((Generator::t(a, j1, j2), 1));
            }
        }
    }
    for &i in fib(1) {
        if i == 1 {
            continue;
        }
        for &j in fib(2) {
            for a in 0..2u8 {
                strand.push((Generator::t(a, i, j), 1));
            }
        }
    }

    let images: BTreeMap<Letter, QSeries> = [
        (Letter::E0, generator_sum(&strand, t)),
        (Letter::E1, generator_sum(&twist_image(0), t)),
        (Letter::Em1, generator_sum(&twist_image(1), t)),
    ]
    .into_iter()
    .collect();
    h.substitute(Alphabet::T42, &images, false)
}

// ---------------------------------------------------------------------------
// Defining relations of the four-strand algebra at level 2.

/// The degree-2 defining relations as elements of the free algebra on the
/// canonical generators. The pairing against psi-images must annihilate
/// both `r.m` and `m.r` for every relation r and monomial m.
pub fn t42_relations() -> Vec<QSeries> {
    let trunc = 2;
    let gen = |g: Generator| Series::<Q>::from_letter(Alphabet::T42, trunc, Letter::Gen(g));
    let commutator = |x: &QSeries, y: &QSeries| x.concat_mul(y).sub(&y.concat_mul(x));
    let mut rels = Vec::new();
    let strands = [2u8, 3, 4];

    // [t(a)^{ij}, t(a+b)^{ik} + t(b)^{jk}] for distinct i, j, k.
    for &i in &strands {
        for &j in &strands {
            for &k in &strands {
                if i == j || i == k || j == k {
                    continue;
                }
                for a in 0..2u8 {
                    for b in 0..2u8 {
                        let x = gen(Generator::t(a, i, j));
                        let y =
                            gen(Generator::t((a + b) % 2, i, k)).add(&gen(Generator::t(b, j, k)));
                        rels.push(commutator(&x, &y));
                    }
                }
            }
        }
    }
    // [t^{1i} + t^{1j} + sum_c t(c)^{ij}, t(a)^{ij}].
    for &i in &strands {
        for &j in &strands {
            if i == j {
                continue;
            }
            let sum = gen(Generator::t1(i))
                .add(&gen(Generator::t1(j)))
                .add(&gen(Generator::t(0, i, j)))
                .add(&gen(Generator::t(1, i, j)));
            for a in 0..2u8 {
                rels.push(commutator(&sum, &gen(Generator::t(a, i, j))));
            }
        }
    }
    // [t^{1i}, t^{1j} + sum_c t(c)^{ij}].
    for &i in &strands {
        for &j in &strands {
            if i == j {
                continue;
            }
            let y = gen(Generator::t1(j))
                .add(&gen(Generator::t(0, i, j)))
                .add(&gen(Generator::t(1, i, j)));
            rels.push(commutator(&gen(Generator::t1(i)), &y));
        }
    }
    // [t^{1i}, t(a)^{jk}] for distinct i, j, k.
    for &i in &strands {
        let rest: Vec<u8> = strands.iter().copied().filter(|&x| x != i).collect();
        for a in 0..2u8 {
            rels.push(commutator(
                &gen(Generator::t1(i)),
                &gen(Generator::t(a, rest[0], rest[1])),
            ));
        }
    }
    rels
}

// ---------------------------------------------------------------------------
// Exact rational gradients for the wedge and table checks.

/// Value plus gradient with respect to (z2, z3, z4), all exact.
#[derive(Clone, Debug, PartialEq)]
struct Grad {
    v: Q,
    d: [Q; 3],
}

impl Grad {
    fn constant(v: Q) -> Self {
        Grad {
            v,
            d: [Q::zero(), Q::zero(), Q::zero()],
        }
    }

    fn variable(idx: usize, v: Q) -> Self {
        let mut d = [Q::zero(), Q::zero(), Q::zero()];
        d[idx] = q_int(1);
        Grad { v, d }
    }

    fn add(&self, o: &Grad) -> Grad {
        Grad {
            v: &self.v + &o.v,
            d: [
                &self.d[0] + &o.d[0],
                &self.d[1] + &o.d[1],
                &self.d[2] + &o.d[2],
            ],
        }
    }

    fn sub(&self, o: &Grad) -> Grad {
        Grad {
            v: &self.v - &o.v,
            d: [
                &self.d[0] - &o.d[0],
                &self.d[1] - &o.d[1],
                &self.d[2] - &o.d[2],
            ],
        }
    }

    fn div(&self, o: &Grad) -> Grad {
        assert!(!o.v.is_zero());
        let v = &self.v / &o.v;
        let d = [0, 1, 2].map(|i| (&self.d[i] - &v * &o.d[i]) / &o.v);
        Grad { v, d }
    }

    /// Gradient of log of this value (value must be nonzero).
    fn dlog(&self) -> [Q; 3] {
        assert!(!self.v.is_zero());
        [0, 1, 2].map(|i| &self.d[i] / &self.v)
    }
}

/// The table point as an exact rational function of the sample (z2,z3,z4).
fn point_grad(kind: TableKind, p: u8, sample: &[Q; 3]) -> Grad {
    let z2 = Grad::variable(0, sample[0].clone());
    let z3 = Grad::variable(1, sample[1].clone());
    let z4 = Grad::variable(2, sample[2].clone());
    match (kind, p) {
        (_, 0) => Grad::constant(Q::zero()),
        (_, 1) => Grad::constant(q_int(1)),
        (TableKind::Iota, 2) => Grad::constant(Q::zero()).sub(&z4).div(&z3),
        (TableKind::Iota, 3) => z2.div(&z3),
        (TableKind::Kappa, 2) => z3.sub(&z4).div(&z3.add(&z4)),
        (TableKind::Kappa, 3) => z3.add(&z4).div(&z3.sub(&z4)),
        (TableKind::Kappa, 4) => z3.sub(&z2).div(&z3.add(&z2)),
        _ => panic!("point index out of range"),
    }
}

/// The basis 1-form evaluated at the sample, as a gradient vector.
fn form_grad(b: FormBasis, sample: &[Q; 3]) -> [Q; 3] {
    let z = |i: u8| sample[i as usize - 2].clone();
    match b {
        FormBasis::L(i) => {
            let mut d = [Q::zero(), Q::zero(), Q::zero()];
            d[i as usize - 2] = q_int(1) / z(i);
            d
        }
        FormBasis::M(a, i, j) => {
            let sign = if a == 0 { q_int(1) } else { q_int(-1) };
            let denom = z(i) - &sign * z(j);
            assert!(!denom.is_zero(), "degenerate sample for form basis");
            let mut d = [Q::zero(), Q::zero(), Q::zero()];
            d[i as usize - 2] = q_int(1) / denom.clone();
            d[j as usize - 2] = -&sign / denom;
            d
        }
    }
}

fn sample_config(rng: &mut ChaCha8Rng) -> [Q; 3] {
    loop {
        let a = rng.gen_range(-50i64..=50);
        let b = rng.gen_range(-50i64..=50);
        let c = rng.gen_range(-50i64..=50);
        // Stay off every arrangement hyperplane.
        if a == 0 || b == 0 || c == 0 {
            continue;
        }
        if a == b || a == c || b == c || a + b == 0 || a + c == 0 || b + c == 0 {
            continue;
        }
        return [q_int(a), q_int(b), q_int(c)];
    }
}

/// Check every table entry against the exact gradient of log of the point
/// difference at random non-degenerate rational configurations.
pub fn dlog_table_sanity(kind: TableKind, trials: u32, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let sample = sample_config(&mut rng);
        let n = kind.point_count();
        for p in 0..n {
            for q in (p + 1)..n {
                let fv = kind.dlog(p, q);
                let mut expect = [Q::zero(), Q::zero(), Q::zero()];
                for (b, c) in &fv.0 {
                    let g = form_grad(*b, &sample);
                    for i in 0..3 {
                        expect[i] = &expect[i] + c * &g[i];
                    }
                }
                let gp = point_grad(kind, p, &sample);
                let gq = point_grad(kind, q, &sample);
                let diff = gp.sub(&gq);
                let actual = if diff.v.is_zero() {
                    // Constant difference (the 0-1 pair): the zero form.
                    [Q::zero(), Q::zero(), Q::zero()]
                } else {
                    diff.dlog()
                };
                if actual != expect {
                    return false;
                }
            }
        }
    }
    true
}

/// The composite of two deletion steps followed by the wedge, evaluated at
/// random rational configuration points. Returns true iff every evaluation
/// is exactly zero.
pub fn wedge_zero_check(sym: &ConfigSymbol, trials: u32, seed: u64) -> bool {
    assert!(
        sym.depth() >= 2,
        "the composite needs at least two interior points"
    );
    // (residual point list) -> accumulated (outer form, inner form, sign).
    let mut groups: BTreeMap<Vec<u8>, Vec<(FormVector, FormVector, i64)>> = BTreeMap::new();
    for i in 1..sym.points.len() - 1 {
        for (nb_i, sign_i) in [(i + 1, 1i64), (i - 1, -1i64)] {
            if sym.points[nb_i] == sym.points[i] {
                continue;
            }
            let omega_inner = sym.kind.dlog(sym.points[nb_i], sym.points[i]);
            if omega_inner.0.is_empty() {
                continue;
            }
            let first = sym.delete(i);
            for j in 1..first.points.len() - 1 {
                for (nb_j, sign_j) in [(j + 1, 1i64), (j - 1, -1i64)] {
                    if first.points[nb_j] == first.points[j] {
                        continue;
                    }
                    let omega_outer = first.kind.dlog(first.points[nb_j], first.points[j]);
                    if omega_outer.0.is_empty() {
                        continue;
                    }
                    let second = first.delete(j);
                    groups.entry(second.points).or_default().push((
                        omega_outer,
                        omega_inner.clone(),
                        sign_i * sign_j,
                    ));
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let sample = sample_config(&mut rng);
        let eval = |fv: &FormVector| -> [Q; 3] {
            let mut acc = [Q::zero(), Q::zero(), Q::zero()];
            for (b, c) in &fv.0 {
                let g = form_grad(*b, &sample);
                for i in 0..3 {
                    acc[i] = &acc[i] + c * &g[i];
                }
            }
            acc
        };
        for terms in groups.values() {
            let mut wedge = [
                [Q::zero(), Q::zero(), Q::zero()],
                [Q::zero(), Q::zero(), Q::zero()],
                [Q::zero(), Q::zero(), Q::zero()],
            ];
            for (outer, inner, sign) in terms {
                let a = eval(outer);
                let b = eval(inner);
                for p in 0..3 {
                    for q in (p + 1)..3 {
                        let term = (&a[p] * &b[q] - &a[q] * &b[p]) * q_int(*sign);
                        wedge[p][q] = &wedge[p][q] + &term;
                    }
                }
            }
            for p in 0..3 {
                for q in (p + 1)..3 {
                    if !wedge[p][q].is_zero() {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Random monomial over the generator alphabet, for quotient tests.
pub fn random_t42_monomial(len: usize, rng: &mut ChaCha8Rng) -> Word {
    let letters = Alphabet::T42.letters();
    Word(
        (0..len)
            .map(|_| letters[rng.gen_range(0..letters.len())])
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyndon::random_grouplike;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn table_sanity_both_embeddings() {
        assert!(dlog_table_sanity(TableKind::Iota, 4, 11));
        assert!(dlog_table_sanity(TableKind::Kappa, 4, 12));
    }

    #[test]
    fn subst_spec_examples() {
        let t = 3;
        // h = 1 + e0 under 1,2,3 -> 1 + t^{12}.
        let h = QSeries::one(Alphabet::A012, t).add(&QSeries::from_letter(
            Alphabet::A012,
            t,
            Letter::E0,
        ));
        let img = subst(&h, SubstSpec::H123);
        assert_eq!(img.coefficient(&w("T1_2")), q_int(1));
        assert_eq!(img.num_terms(), 2);
        // h = 1 + e-1 under delta: e-1 -> 0.
        let h = QSeries::one(Alphabet::A012, t).add(&QSeries::from_letter(
            Alphabet::A012,
            t,
            Letter::Em1,
        ));
        assert_eq!(
            subst(&h, SubstSpec::Delta234),
            QSeries::one(Alphabet::T42, t)
        );
        // h = 1 + e1 under 1,2,34 -> 1 + t+23 + t+24.
        let h = QSeries::one(Alphabet::A012, t).add(&QSeries::from_letter(
            Alphabet::A012,
            t,
            Letter::E1,
        ));
        let img = subst(&h, SubstSpec::H12_34);
        assert_eq!(img.coefficient(&w("T0_23")), q_int(1));
        assert_eq!(img.coefficient(&w("T0_24")), q_int(1));
    }

    #[test]
    fn generic_substitution_rule() {
        // t(a)^{23} under fibers {1}, {2}, {3,4}: t(a)^{23} + t(a)^{24}.
        let f = IndexMap::new([vec![1], vec![2], vec![3, 4]]).unwrap();
        let e1 = QSeries::from_letter(Alphabet::A012, 2, Letter::E1);
        let img = subst_generic(&e1, &f);
        assert_eq!(img.coefficient(&w("T0_23")), q_int(1));
        assert_eq!(img.coefficient(&w("T0_24")), q_int(1));
        assert_eq!(img.num_terms(), 2);
        // Identity-shaped map fixes t^{12}.
        let f_id = IndexMap::new([vec![1], vec![2], vec![3]]).unwrap();
        let e0 = QSeries::from_letter(Alphabet::A012, 2, Letter::E0);
        assert_eq!(subst_generic(&e0, &f_id).coefficient(&w("T1_2")), q_int(1));
        // Malformed maps are rejected.
        assert!(IndexMap::new([vec![2], vec![1], vec![3]]).is_err());
        assert!(IndexMap::new([vec![1], vec![2, 2], vec![3]]).is_err());
    }

    #[test]
    fn generic_matches_named_expansions() {
        let h = random_grouplike(Alphabet::A012, 3, 5);
        let cases: [(SubstSpec, [Vec<u8>; 3]); 4] = [
            (SubstSpec::H123, [vec![1], vec![2], vec![3]]),
            (SubstSpec::H12_34, [vec![1], vec![2], vec![3, 4]]),
            (SubstSpec::H12_3_4, [vec![1, 2], vec![3], vec![4]]),
            (SubstSpec::H1_23_4, [vec![1], vec![2, 3], vec![4]]),
        ];
        for (spec, fibers) in cases {
            let f = IndexMap::new(fibers).unwrap();
            assert_eq!(subst(&h, spec), subst_generic(&h, &f), "spec {spec:?}");
        }
    }

    #[test]
    fn pairing_base_cases() {
        let exp = PsiExpander::new();
        let one = QSeries::one(Alphabet::T42, 4);
        let sym0 = embed_f(&Word::empty());
        assert_eq!(exp.pair_dual(&one, &sym0), q_int(1));
        let sym1 = embed_f(&w("z"));
        assert_eq!(exp.pair_dual(&one, &sym1), Q::zero());
    }

    #[test]
    fn partial_s_spec_cases() {
        // s = t^{12} deletes a trailing 0 with coefficient 1.
        let s = QSeries::from_letter(Alphabet::T42, 1, Letter::Gen(Generator::t1(2)));
        for word in ["1,0", "z,0", "z,1,0"] {
            let sym = embed_f(&w(word));
            let parts = partial_s(&s, &sym);
            assert_eq!(parts.len(), 1, "word {word}");
            assert_eq!(parts[0].1, q_int(1));
            assert_eq!(parts[0].0.depth(), sym.depth() - 1);
        }
        // k = 0: empty sum.
        assert!(partial_s(&s, &embed_f(&Word::empty())).is_empty());
        // s = t(1)^{34} pairs to zero against both neighbors of iota(z).
        let s = QSeries::from_letter(Alphabet::T42, 1, Letter::Gen(Generator::t(1, 3, 4)));
        assert!(partial_s(&s, &embed_f(&w("z"))).is_empty());
    }

    #[test]
    fn expansion_matches_recursion_oracle() {
        let exp = PsiExpander::new();
        let h = random_grouplike(Alphabet::A012, 3, 3);
        let phi = subst(&h, SubstSpec::H12_34).concat_mul(&subst(&h, SubstSpec::H12_3_4));
        for word in ["z", "1,0", "z,0", "1,z,0"] {
            let sym = embed_f(&w(word));
            assert_eq!(
                exp.pair_dual(&phi, &sym),
                pair_dual_recursive(&phi, &sym),
                "iota word {word}"
            );
        }
        for word in ["z,-1,0", "-z2,0,-1"] {
            let sym = embed_g(&w(word));
            assert_eq!(
                exp.pair_dual(&phi, &sym),
                pair_dual_recursive(&phi, &sym),
                "kappa word {word}"
            );
        }
    }

    #[test]
    fn wedge_vanishes_on_sample_symbols() {
        assert!(wedge_zero_check(&embed_f(&w("z,0")), 3, 21));
        assert!(wedge_zero_check(&embed_g(&w("-1,0,z")), 3, 22));
        // Two equal interior points: every composite term vanishes
        // syntactically.
        assert!(wedge_zero_check(&embed_f(&w("1,1")), 2, 23));
    }

    #[test]
    fn relations_annihilated_by_pairing() {
        let exp = PsiExpander::new();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let rels = t42_relations();
        assert!(!rels.is_empty());
        for rel in rels.iter().take(12) {
            for word in ["z,0", "1,z", "z,1,0"] {
                let sym = embed_f(&w(word));
                let mono = random_t42_monomial(sym.depth().saturating_sub(2), &mut rng);
                let m = Series::monomial(Alphabet::T42, 4, mono, q_int(1));
                let left = rel.with_truncation(4).concat_mul(&m);
                let right = m.concat_mul(&rel.with_truncation(4));
                assert_eq!(exp.pair_dual(&left, &sym), Q::zero(), "r.m on {word}");
                assert_eq!(exp.pair_dual(&right, &sym), Q::zero(), "m.r on {word}");
            }
        }
    }
}
