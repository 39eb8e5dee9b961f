//! Verification suites: the tau_z differential identity, the mixed-pentagon
//! pairing lemmas (exact, quantified over random group-like series), the
//! Broadhurst duality of the numeric Euler-sum series, the two chained
//! pairing identities behind the main theorem, duality/distribution
//! properties, and the membership-condition residuals.
//!
//! Checks that quantify over *all* group-like series run in exact rational
//! arithmetic on seeded random group-like elements: a convention error
//! cannot pass them. Checks whose hypothesis is pentagon membership of the
//! numeric series are reported as conditional and never gate an exit code.

use crate::bigfloat::NumericValue;
use crate::confluence::{b_basis, partial_c, ConfluenceEngine, ConfluenceError};
use crate::dualpair::{embed_f, embed_g, generator_sum, subst, PsiExpander, SubstSpec};
use crate::rational::Q;
use crate::report::{timed, CheckReport};
use crate::series::{Coeff, QSeries, Series};
use crate::word::{words_of_weight, Alphabet, Generator, Letter, Word};
use crate::zoracle::{EulerOracle, NSeries};
use serde_json::json;
use std::collections::BTreeMap;

// ---------------------------------------------------------------------------
// The z-decorated algebra and its operators.

/// First letter in {1,z} and last in {0,z}, plus the constants and the
/// single letter z.
pub fn in_az0(w: &Word) -> bool {
    if !w.letters().iter().all(|&l| Alphabet::AZ.contains(l)) {
        return false;
    }
    match w.weight() {
        0 => true,
        1 => w.letters()[0] == Letter::Ez,
        _ => {
            matches!(w.letters()[0], Letter::E1 | Letter::Ez)
                && matches!(w.letters().last(), Some(Letter::E0) | Some(Letter::Ez))
        }
    }
}

/// First letter in {1,z}, plus the constants.
pub fn in_az1(w: &Word) -> bool {
    w.letters().iter().all(|&l| Alphabet::AZ.contains(l))
        && (w.is_empty() || matches!(w.letters()[0], Letter::E1 | Letter::Ez))
}

pub fn az0_basis(weight: usize) -> Vec<Word> {
    words_of_weight(Alphabet::AZ, weight)
        .into_iter()
        .filter(in_az0)
        .collect()
}

pub fn az1_basis(weight: usize) -> Vec<Word> {
    words_of_weight(Alphabet::AZ, weight)
        .into_iter()
        .filter(in_az1)
        .collect()
}

fn letter_series<C: Coeff>(alpha: Alphabet, trunc: usize, l: Letter) -> Series<C> {
    Series::from_letter(alpha, trunc, l)
}

/// The anti-automorphism tau_z: e0 -> ez - e1, e1 -> ez - e0, ez -> ez.
pub fn tau_z(u: &QSeries) -> QSeries {
    assert_eq!(u.alphabet, Alphabet::AZ);
    let t = u.truncation;
    let ez = letter_series::<Q>(Alphabet::AZ, t, Letter::Ez);
    let images: BTreeMap<Letter, QSeries> = [
        (
            Letter::E0,
            ez.sub(&letter_series(Alphabet::AZ, t, Letter::E1)),
        ),
        (
            Letter::E1,
            ez.sub(&letter_series(Alphabet::AZ, t, Letter::E0)),
        ),
        (Letter::Ez, ez.clone()),
    ]
    .into_iter()
    .collect();
    u.substitute(Alphabet::AZ, &images, true)
}

/// The boundary-decorated derivation on the z-alphabet: letters whose
/// unordered neighbor pair is {z,c} are deleted, with boundary points 0 on
/// the left and 1 on the right.
pub fn partial_zc(u: &QSeries, c: Letter) -> QSeries {
    assert_eq!(u.alphabet, Alphabet::AZ);
    assert!(matches!(c, Letter::E0 | Letter::E1));
    let mut out = QSeries::zero(Alphabet::AZ, u.truncation);
    for (w, q) in u.terms() {
        let k = w.weight();
        let at = |i: isize| -> Letter {
            if i < 0 {
                Letter::E0
            } else if i as usize >= k {
                Letter::E1
            } else {
                w.letters()[i as usize]
            }
        };
        let is_zc =
            |a: Letter, b: Letter| (a == Letter::Ez && b == c) || (b == Letter::Ez && a == c);
        for i in 0..k {
            let ii = i as isize;
            let coeff = i64::from(is_zc(at(ii), at(ii + 1))) - i64::from(is_zc(at(ii), at(ii - 1)));
            if coeff == 0 {
                continue;
            }
            let mut letters = w.letters().to_vec();
            letters.remove(i);
            out.add_term(Word(letters), q * Q::from_integer(coeff.into()));
        }
    }
    out
}

/// Specialization z -> -1 on the z-alphabet.
pub fn z_to_minus_one(u: &QSeries) -> QSeries {
    let t = u.truncation;
    let images: BTreeMap<Letter, QSeries> = [
        (Letter::E0, letter_series(Alphabet::A012, t, Letter::E0)),
        (Letter::E1, letter_series(Alphabet::A012, t, Letter::E1)),
        (Letter::Ez, letter_series(Alphabet::A012, t, Letter::Em1)),
    ]
    .into_iter()
    .collect();
    u.substitute(Alphabet::A012, &images, false)
}

/// Specialization z -> infinity: the letter z dies.
pub fn z_to_infinity(u: &QSeries) -> QSeries {
    let t = u.truncation;
    let images: BTreeMap<Letter, QSeries> = [
        (Letter::E0, letter_series(Alphabet::A012, t, Letter::E0)),
        (Letter::E1, letter_series(Alphabet::A012, t, Letter::E1)),
        (Letter::Ez, Series::zero(Alphabet::A012, t)),
    ]
    .into_iter()
    .collect();
    u.substitute(Alphabet::A012, &images, false)
}

/// The involution T: e0 <-> e1 and e-1 -> -e0 - e1 - e-1.
pub fn t_involution<C: Coeff>(u: &Series<C>) -> Series<C> {
    assert_eq!(u.alphabet, Alphabet::A012);
    let t = u.truncation;
    let e0 = letter_series::<C>(Alphabet::A012, t, Letter::E0);
    let e1 = letter_series::<C>(Alphabet::A012, t, Letter::E1);
    let em1 = letter_series::<C>(Alphabet::A012, t, Letter::Em1);
    let images: BTreeMap<Letter, Series<C>> = [
        (Letter::E0, e1.clone()),
        (Letter::E1, e0.clone()),
        (Letter::Em1, e0.add(&e1).add(&em1).neg()),
    ]
    .into_iter()
    .collect();
    u.substitute(Alphabet::A012, &images, false)
}

/// The lambda specialization of the kappa pairing: e-1, ez -> 0,
/// e0 -> e0 - e1, e-z2 -> -e1.
pub fn lambda_map(u: &QSeries) -> QSeries {
    assert_eq!(u.alphabet, Alphabet::AB);
    let t = u.truncation;
    let e0 = letter_series::<Q>(Alphabet::A012, t, Letter::E0);
    let e1 = letter_series::<Q>(Alphabet::A012, t, Letter::E1);
    let images: BTreeMap<Letter, QSeries> = [
        (Letter::E0, e0.sub(&e1)),
        (Letter::Emz2, e1.neg()),
        (Letter::Em1, Series::zero(Alphabet::A012, t)),
        (Letter::Ez, Series::zero(Alphabet::A012, t)),
    ]
    .into_iter()
    .collect();
    u.substitute(Alphabet::A012, &images, false)
}

// ---------------------------------------------------------------------------
// Exact suites.

/// tau_z o partial_{z,c} o tau_z = partial_{z,c} on the az0 subspace,
/// checked exactly word by word (tau_z is an involution, so it equals its
/// own inverse).
pub fn check_tauz_theorem(max_weight: usize) -> CheckReport {
    timed(|| {
        let mut r = CheckReport::new("tauz_differential", json!({ "max_weight": max_weight }));
        for weight in 0..=max_weight {
            for u in az0_basis(weight) {
                let s = Series::monomial(Alphabet::AZ, max_weight, u.clone(), Q::one());
                for c in [Letter::E0, Letter::E1] {
                    let lhs = tau_z(&partial_zc(&tau_z(&s), c));
                    let rhs = partial_zc(&s, c);
                    let diff = lhs.sub(&rhs);
                    r.observe(diff.max_abs(), 0.0);
                    if !diff.is_zero() {
                        r.pass = false;
                    }
                }
            }
        }
        r
    })
}

/// The left pentagon pairing lemma: for any group-like h and every word in
/// az1, `<h^{1,2,34} h^{12,3,4}, psi(f(u))> = <h, u|_{z->-1}>`. Exact.
pub fn check_pent_left(h: &QSeries, max_weight: usize, expander: &PsiExpander) -> CheckReport {
    timed(|| {
        let mut r = CheckReport::new(
            "pent_left",
            json!({ "max_weight": max_weight, "truncation": h.truncation }),
        );
        let phi = subst(h, SubstSpec::H12_34).concat_mul(&subst(h, SubstSpec::H12_3_4));
        for weight in 0..=max_weight {
            for u in az1_basis(weight) {
                let sym = embed_f(&u);
                let lhs = expander.pair_dual(&phi, &sym);
                let s = Series::monomial(Alphabet::AZ, max_weight, u.clone(), Q::one());
                let rhs = h.pair_combo(&z_to_minus_one(&s));
                let diff = lhs - rhs;
                r.observe(crate::series::q_residual(&diff), 0.0);
            }
        }
        r
    })
}

/// The right pentagon pairing lemma: for any group-like h and every word in
/// az0, `<delta(h)^{2,3,4} h^{1,23,4} h^{1,2,3}, psi(f(u))>` equals the
/// double sum over derivation chains `D_{c_1} ... D_{c_l}` with
/// `D_0 = -d_{z,0} - d_{z,1}` and `D_1 = d_{z,1}`. Exact.
pub fn check_pent_right(h: &QSeries, max_weight: usize, expander: &PsiExpander) -> CheckReport {
    timed(|| {
        let mut r = CheckReport::new(
            "pent_right",
            json!({ "max_weight": max_weight, "truncation": h.truncation }),
        );
        let phi = subst(h, SubstSpec::Delta234)
            .concat_mul(&subst(h, SubstSpec::H1_23_4))
            .concat_mul(&subst(h, SubstSpec::H123));
        for weight in 0..=max_weight {
            for u in az0_basis(weight) {
                let sym = embed_f(&u);
                let lhs = expander.pair_dual(&phi, &sym);
                let rhs = pent_right_sum(h, &u, max_weight);
                let diff = lhs - rhs;
                r.observe(crate::series::q_residual(&diff), 0.0);
            }
        }
        r
    })
}

fn apply_d(u: &QSeries, c: u8) -> QSeries {
    match c {
        0 => partial_zc(u, Letter::E0)
            .add(&partial_zc(u, Letter::E1))
            .neg(),
        1 => partial_zc(u, Letter::E1),
        _ => unreachable!(),
    }
}

fn pent_right_sum(h: &QSeries, u: &Word, max_weight: usize) -> Q {
    let mut acc = Q::zero();
    // DFS over chains; a new D acts on the outside, its letter goes to the
    // front of the coefficient word e_{-c_1} ... e_{-c_l}.
    let start = Series::monomial(Alphabet::AZ, max_weight, u.clone(), Q::one());
    let mut stack: Vec<(QSeries, Vec<Letter>)> = vec![(start, Vec::new())];
    while let Some((image, cword)) = stack.pop() {
        let left = h.pair(&Word(cword.clone()));
        if !left.is_zero() {
            let right = h.pair_combo(&z_to_infinity(&image));
            acc += left * right;
        }
        if image.max_weight() == 0 {
            continue;
        }
        for (c, letter) in [(0u8, Letter::E0), (1, Letter::Em1)] {
            let next = apply_d(&image, c);
            if next.is_zero() {
                continue;
            }
            let mut w = vec![letter];
            w.extend_from_slice(&cword);
            stack.push((next, w));
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Numeric suites.

fn scaled_letter(l: Letter, c: &NumericValue, trunc: usize) -> NSeries {
    letter_series::<NumericValue>(Alphabet::A012, trunc, l).scale(c)
}

/// Broadhurst duality of the numeric series:
/// `h = exp(-a e1) T(h)^{-1} exp(-a e0)` with `a` the coefficient of e-1.
pub fn check_broadhurst(h: &NSeries, max_weight: usize, tol: f64) -> CheckReport {
    timed(|| {
        let mut r = CheckReport::new(
            "broadhurst_duality",
            json!({ "max_weight": max_weight, "tol": tol }),
        );
        let alpha = h.pair(&Word::single(Letter::Em1));
        let exp_e1 = scaled_letter(Letter::E1, &alpha.neg(), h.truncation)
            .exp()
            .unwrap();
        let exp_e0 = scaled_letter(Letter::E0, &alpha.neg(), h.truncation)
            .exp()
            .unwrap();
        let rhs = exp_e1
            .concat_mul(&t_involution(h).inverse())
            .concat_mul(&exp_e0);
        for weight in 0..=max_weight.min(h.truncation) {
            for w in words_of_weight(Alphabet::A012, weight) {
                let diff = h.pair(&w).add(&rhs.pair(&w).neg());
                r.observe(diff.abs_f64(), tol);
            }
        }
        r.params["alpha"] = json!(alpha.to_f64());
        r
    })
}

/// The two left-chain pairing identities (conditional on pentagon
/// membership of the series), plus the exact nilpotence of the z->1 image
/// under the repeated contraction of adjacent {-1, -z2} pairs.
pub fn check_left_chain(
    h: &NSeries,
    max_weight: usize,
    tol: f64,
    expander: &PsiExpander,
) -> (CheckReport, CheckReport) {
    let alpha = h.pair(&Word::single(Letter::Em1));
    let chain = timed(|| {
        let mut r = CheckReport::new(
            "left_chain",
            json!({ "max_weight": max_weight, "tol": tol }),
        )
        .conditional();
        let t = h.truncation;
        let inv123 = subst(h, SubstSpec::H123).inverse();
        let inv1234 = subst(h, SubstSpec::H1_23_4).inverse();
        let tp_sum: NSeries = generator_sum(
            &[
                (Generator::t(0, 2, 3), 1),
                (Generator::t(0, 2, 4), 1),
                (Generator::t(0, 3, 4), 1),
            ],
            t,
        );
        let exp_right = tp_sum.scale(&alpha.neg()).exp().unwrap();
        let step1 = inv123.concat_mul(&inv1234).concat_mul(&exp_right);
        let strand_sum: NSeries = generator_sum(
            &[
                (Generator::t1(3), 1),
                (Generator::t(0, 2, 3), 1),
                (Generator::t(1, 2, 3), 1),
            ],
            t,
        );
        let exp_left = strand_sum.scale(&alpha.neg()).exp().unwrap();
        let step2 = exp_left.concat_mul(&step1);
        for weight in 0..=max_weight {
            for u in b_basis(weight) {
                let sym = embed_g(&u);
                let s = Series::monomial(Alphabet::AB, t, u.clone(), Q::one());
                let rhs = h.pair_combo(&crate::confluence::z_to_one(&s));
                for lhs_series in [&step1, &step2] {
                    let lhs = expander.pair_dual(lhs_series, &sym);
                    r.observe(lhs.add(&rhs.neg()).abs_f64(), tol);
                }
            }
        }
        r
    });
    let nilpotence = timed(|| {
        let mut r = CheckReport::new("d1_nilpotence", json!({ "max_weight": max_weight.max(5) }));
        for weight in 1..=max_weight.max(5) {
            for u in b_basis(weight) {
                let mut img = partial_c(
                    &Series::monomial(Alphabet::AB, weight, u.clone(), Q::one()),
                    1,
                );
                while !img.is_zero() {
                    let spec = crate::confluence::z_to_one(&img);
                    r.observe(spec.max_abs(), 0.0);
                    img = partial_c(&img, 1);
                }
            }
        }
        r
    });
    (chain, nilpotence)
}

/// The lambda pairing of the right chain: exact for any h.
pub fn check_right_chain_lambda(
    h: &QSeries,
    max_weight: usize,
    expander: &PsiExpander,
) -> CheckReport {
    timed(|| {
        let mut r = CheckReport::new(
            "right_chain_lambda",
            json!({ "max_weight": max_weight, "truncation": h.truncation }),
        );
        let phi = subst(h, SubstSpec::Delta234);
        for weight in 0..=max_weight {
            for u in words_of_weight(Alphabet::AB, weight) {
                let sym = embed_g(&u);
                let lhs = expander.pair_dual(&phi, &sym);
                let s = Series::monomial(Alphabet::AB, h.truncation, u.clone(), Q::one());
                let rhs = h.pair_combo(&lambda_map(&s));
                let diff = lhs - rhs;
                r.observe(crate::series::q_residual(&diff), 0.0);
            }
        }
        r
    })
}

/// The reg_{z->0} pairing of the right chain on B'' words (numeric,
/// conditional).
pub fn check_right_chain_reg(
    h: &NSeries,
    engine: &ConfluenceEngine,
    max_weight: usize,
    tol: f64,
    expander: &PsiExpander,
) -> Result<CheckReport, ConfluenceError> {
    let alpha = h.pair(&Word::single(Letter::Em1));
    let t = h.truncation;
    let exp_t12: NSeries = generator_sum(&[(Generator::t1(2), 1)], t)
        .scale(&alpha)
        .exp()
        .unwrap();
    let phi = exp_t12
        .concat_mul(&subst(&t_involution(h), SubstSpec::H12_34))
        .concat_mul(&subst(h, SubstSpec::Delta234));
    let start = std::time::Instant::now();
    let mut r = CheckReport::new(
        "right_chain_reg",
        json!({ "max_weight": max_weight, "tol": tol }),
    )
    .conditional();
    for weight in 0..=max_weight {
        for u in words_of_weight(Alphabet::AB, weight) {
            if !crate::confluence::in_bpp(&u) {
                continue;
            }
            let sym = embed_g(&u);
            let lhs = expander.pair_dual(&phi, &sym);
            let s = Series::monomial(Alphabet::AB, t, u.clone(), Q::one());
            let rhs = h.pair_combo(&engine.reg_z0(&s)?);
            r.observe(lhs.add(&rhs.neg()).abs_f64(), tol);
        }
    }
    r.seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

/// The phi pairing of the right chain on B words (numeric, conditional).
pub fn check_right_chain_phi(
    h: &NSeries,
    engine: &ConfluenceEngine,
    max_weight: usize,
    tol: f64,
    expander: &PsiExpander,
) -> Result<CheckReport, ConfluenceError> {
    let alpha = h.pair(&Word::single(Letter::Em1));
    let t = h.truncation;
    let strand_sum: NSeries = generator_sum(
        &[
            (Generator::t1(3), 1),
            (Generator::t(0, 2, 3), 1),
            (Generator::t(1, 2, 3), 1),
        ],
        t,
    );
    let exp_left = strand_sum.scale(&alpha.neg()).exp().unwrap();
    let tp_sum: NSeries = generator_sum(
        &[
            (Generator::t(0, 2, 3), 1),
            (Generator::t(0, 2, 4), 1),
            (Generator::t(0, 3, 4), 1),
        ],
        t,
    );
    let exp_right = tp_sum.scale(&alpha.neg()).exp().unwrap();
    let phi_series = exp_left
        .concat_mul(&subst(h, SubstSpec::H12_3_4).inverse())
        .concat_mul(&subst(h, SubstSpec::H12_34).inverse())
        .concat_mul(&subst(h, SubstSpec::Delta234))
        .concat_mul(&exp_right);
    let start = std::time::Instant::now();
    let mut r = CheckReport::new(
        "right_chain_phi",
        json!({ "max_weight": max_weight, "tol": tol }),
    )
    .conditional();
    for weight in 0..=max_weight {
        for u in b_basis(weight) {
            let sym = embed_g(&u);
            let lhs = expander.pair_dual(&phi_series, &sym);
            let s = Series::monomial(Alphabet::AB, t, u.clone(), Q::one());
            let rhs = h.pair_combo(&engine.phi(&s)?);
            r.observe(lhs.add(&rhs.neg()).abs_f64(), tol);
        }
    }
    r.seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

/// The main annihilation check: the numeric pairing of the Euler-sum series
/// against every confluence relation up to `max_weight`. Oracle-side only.
pub fn check_main_theorem(
    oracle: &EulerOracle,
    engine: &ConfluenceEngine,
    max_weight: usize,
    tol: f64,
) -> Result<CheckReport, String> {
    let start = std::time::Instant::now();
    let mut r = CheckReport::new(
        "main_theorem",
        json!({ "max_weight": max_weight, "tol": tol, "precision_bits": oracle.precision_bits }),
    );
    for weight in 1..=max_weight {
        for src in b_basis(weight) {
            let rel = engine.icf_element_word(&src).map_err(|e| e.to_string())?;
            let v = oracle.eval_combo(&rel).map_err(|e| e.to_string())?;
            r.observe(v.abs_f64(), tol);
        }
    }
    r.seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Duality and distribution properties of the numeric series: vanishing
/// letter coefficients, `g(e0,e1) g(e1,e0) = 1` for the level-1 shadow, and
/// the two-fold distribution identity with its reported rho.
pub fn check_pent_property(h: &NSeries, max_weight: usize, tol: f64) -> CheckReport {
    timed(|| {
        let mut r = CheckReport::new(
            "pent_property",
            json!({ "max_weight": max_weight, "tol": tol }),
        );
        // (i) the letter coefficients vanish exactly.
        for l in [Letter::E0, Letter::E1] {
            r.observe(h.pair(&Word::single(l)).abs_f64(), 0.0);
        }

        let t = h.truncation;
        let e0 = letter_series::<NumericValue>(Alphabet::A012, t, Letter::E0);
        let e1 = letter_series::<NumericValue>(Alphabet::A012, t, Letter::E1);
        let zero = Series::<NumericValue>::zero(Alphabet::A012, t);
        let sub3 = |a: &NSeries, b: &NSeries, c: &NSeries| -> NSeries {
            let images: BTreeMap<Letter, NSeries> = [
                (Letter::E0, a.clone()),
                (Letter::E1, b.clone()),
                (Letter::Em1, c.clone()),
            ]
            .into_iter()
            .collect();
            h.substitute(Alphabet::A012, &images, false)
        };

        // (iii) duality of the level-1 shadow.
        let g01 = sub3(&e0, &e1, &zero);
        let g10 = sub3(&e1, &e0, &zero);
        let prod = g01.concat_mul(&g10);
        let one = Series::<NumericValue>::one(Alphabet::A012, t);
        let dual_residual = prod.sub(&one);
        for weight in 0..=max_weight.min(t) {
            for w in words_of_weight(Alphabet::A012, weight) {
                r.observe(dual_residual.coefficient(&w).abs_f64(), tol);
            }
        }

        // (iv) distribution: h(2e0, e1, e1) = exp(rho e1) h(e0, e1, 0).
        let two = NumericValue::exact_i64(2);
        let lhs = sub3(&e0.scale(&two), &e1, &e1);
        let base = sub3(&e0, &e1, &zero);
        let rho = lhs.sub(&base).coefficient(&Word::single(Letter::E1));
        let rhs = scaled_letter(Letter::E1, &rho, t)
            .exp()
            .unwrap()
            .concat_mul(&base);
        let dist_residual = lhs.sub(&rhs);
        for weight in 0..=max_weight.min(t) {
            for w in words_of_weight(Alphabet::A012, weight) {
                r.observe(dist_residual.coefficient(&w).abs_f64(), tol);
            }
        }
        r.params["rho"] = json!(rho.to_f64());
        r
    })
}

/// Residual series of the two membership conditions beyond the pentagon:
/// the torsion condition and the adjoint sum. Report-only: membership of
/// the numeric series is not asserted by anything checked here.
pub fn grtm_conditions<C: Coeff>(
    h: &Series<C>,
    sigma_e0: Option<&Series<C>>,
) -> Result<(Series<C>, Series<C>), String> {
    assert_eq!(h.alphabet, Alphabet::A012);
    let t = h.truncation;
    let e0 = letter_series::<C>(Alphabet::A012, t, Letter::E0);
    let e1 = letter_series::<C>(Alphabet::A012, t, Letter::E1);
    let em1 = letter_series::<C>(Alphabet::A012, t, Letter::Em1);
    let sigma_e0 = sigma_e0.ok_or_else(|| {
        "sigma(e0) is undefined at level 2; supply --sigma-e0 to run the membership conditions"
            .to_string()
    })?;

    // tau_{-1}: e0 -> e0, e1 <-> e-1.
    let tau = |s: &Series<C>| -> Series<C> {
        let images: BTreeMap<Letter, Series<C>> = [
            (Letter::E0, e0.clone()),
            (Letter::E1, em1.clone()),
            (Letter::Em1, e1.clone()),
        ]
        .into_iter()
        .collect();
        s.substitute(Alphabet::A012, &images, false)
    };
    // sigma: e1 -> e1, e-1 -> e-1, e0 -> configured.
    let sigma = |s: &Series<C>| -> Series<C> {
        let images: BTreeMap<Letter, Series<C>> = [
            (Letter::E0, sigma_e0.clone()),
            (Letter::E1, e1.clone()),
            (Letter::Em1, em1.clone()),
        ]
        .into_iter()
        .collect();
        s.substitute(Alphabet::A012, &images, false)
    };

    let sh = sigma(h);
    // (3) tau(h)^{-1} tau(sigma(h)) sigma(h)^{-1} h = 1.
    let cond3 = tau(h)
        .inverse()
        .concat_mul(&tau(&sh))
        .concat_mul(&sh.inverse())
        .concat_mul(h)
        .sub(&Series::one(Alphabet::A012, t));

    // (4) e0 + sum_a Ad(tau_a h^{-1})(e^{zeta^a}) + Ad(h^{-1} sigma(h))(e^inf).
    let ad = |x: &Series<C>, y: &Series<C>| x.concat_mul(y).concat_mul(&x.inverse());
    let hinv = h.inverse();
    let e_inf = e0.add(&e1).add(&em1).neg();
    let cond4 = e0
        .add(&ad(&hinv, &e1))
        .add(&ad(&tau(&hinv), &em1))
        .add(&ad(&hinv.concat_mul(&sh), &e_inf));
    Ok((cond3, cond4))
}

/// Wedge-vanishing of the two-step deletion composite at random rational
/// configuration points, over every symbol of both embeddings up to
/// `max_depth`, together with the random-point audit of the dlog tables.
pub fn check_wedge(max_depth: usize, trials: u32, seed: u64) -> CheckReport {
    timed(|| {
        let mut r = CheckReport::new(
            "wedge_vanishing",
            json!({ "max_depth": max_depth, "trials": trials, "seed": seed }),
        );
        let mut fail = |name: &str| {
            r.pass = false;
            r.max_residual = 1.0;
            r.params["first_failure"] = json!(name);
        };
        for depth in 2..=max_depth {
            for u in words_of_weight(Alphabet::AZ, depth) {
                if !crate::dualpair::wedge_zero_check(&embed_f(&u), trials, seed) {
                    fail(&u.label());
                }
            }
            for u in words_of_weight(Alphabet::AB, depth) {
                if !crate::dualpair::wedge_zero_check(&embed_g(&u), trials, seed) {
                    fail(&u.label());
                }
            }
        }
        use crate::dualpair::{dlog_table_sanity, TableKind};
        if !dlog_table_sanity(TableKind::Iota, trials, seed)
            || !dlog_table_sanity(TableKind::Kappa, trials, seed)
        {
            fail("dlog-table");
        }
        r
    })
}

/// Quotient well-definedness of the pairing: every defining relation of the
/// four-strand algebra, multiplied by random monomials on either side,
/// pairs to exactly zero against psi-images of both embeddings.
pub fn check_pairing_quotient(max_depth: usize, seed: u64) -> CheckReport {
    use rand_chacha::rand_core::SeedableRng;
    timed(|| {
        let mut r = CheckReport::new(
            "pairing_quotient",
            json!({ "max_depth": max_depth, "seed": seed }),
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let expander = PsiExpander::new();
        let rels = crate::dualpair::t42_relations();
        for depth in 2..=max_depth {
            let words_f = words_of_weight(Alphabet::AZ, depth);
            let words_g = words_of_weight(Alphabet::AB, depth);
            let symbols =
                words_f.iter().map(embed_f).chain(words_g.iter().map(embed_g));
            for sym in symbols {
                let k = sym.depth();
                for rel in &rels {
                    let mono = crate::dualpair::random_t42_monomial(k - 2, &mut rng);
                    let m = Series::monomial(Alphabet::T42, k, mono, Q::one());
                    let rel_k = rel.with_truncation(k);
                    for phi in [rel_k.concat_mul(&m), m.concat_mul(&rel_k)] {
                        let v = expander.pair_dual(&phi, &sym);
                        r.observe(crate::series::q_residual(&v), 0.0);
                    }
                }
            }
        }
        r
    })
}

/// Perturb one coefficient of a numeric series (fault-injection harness).
pub fn perturb(h: &NSeries, word: &Word, delta: f64) -> NSeries {
    let mut out = h.clone();
    let bump = NumericValue::from_q_prec(
        &Q::new(((delta * 1e9) as i64).into(), 1_000_000_000.into()),
        crate::bigfloat::working_precision(),
    );
    out.add_term(word.clone(), bump);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyndon::random_grouplike;
    use crate::rational::q_int;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn az_subspaces() {
        assert!(in_az0(&Word::empty()));
        assert!(in_az0(&w("z")));
        assert!(!in_az0(&w("1")));
        assert!(in_az0(&w("1,0")));
        assert!(in_az0(&w("z,1,z")));
        assert!(!in_az0(&w("1,1")));
        assert!(in_az1(&w("1")));
        assert!(in_az1(&w("z,1")));
        assert!(!in_az1(&w("0,1")));
    }

    #[test]
    fn tau_z_examples() {
        let t = 4;
        let ez = QSeries::from_letter(Alphabet::AZ, t, Letter::Ez);
        assert_eq!(tau_z(&ez), ez);
        // tau_z(e0 e1) = (ez - e0)(ez - e1): reverse, then substitute.
        let e0e1 = Series::monomial(Alphabet::AZ, t, w("0,1"), Q::one());
        let img = tau_z(&e0e1);
        assert_eq!(img.coefficient(&w("z,z")), q_int(1));
        assert_eq!(img.coefficient(&w("z,1")), q_int(-1));
        assert_eq!(img.coefficient(&w("0,z")), q_int(-1));
        assert_eq!(img.coefficient(&w("0,1")), q_int(1));
        // Involution on a mixed element.
        let mix = e0e1.add(&Series::monomial(Alphabet::AZ, t, w("z,0,1"), q_int(3)));
        assert_eq!(tau_z(&tau_z(&mix)), mix);
    }

    #[test]
    fn partial_zc_examples() {
        let t = 3;
        let ez = QSeries::from_letter(Alphabet::AZ, t, Letter::Ez);
        // Boundary pair {z, a_2} = {z, 1} fires for c = 1.
        assert_eq!(partial_zc(&ez, Letter::E1).constant_term(), q_int(1));
        // Only the a_0 side fires for c = 0, with sign -1.
        assert_eq!(partial_zc(&ez, Letter::E0).constant_term(), q_int(-1));
        // No letter equals z: the derivation vanishes.
        let e0e1 = Series::monomial(Alphabet::AZ, t, w("0,1"), Q::one());
        assert!(partial_zc(&e0e1, Letter::E0).is_zero());
        assert!(partial_zc(&e0e1, Letter::E1).is_zero());
    }

    #[test]
    fn tauz_theorem_small() {
        let r = check_tauz_theorem(4);
        assert!(r.pass, "residual {}", r.max_residual);
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn pent_lemmas_random_h() {
        let expander = PsiExpander::new();
        for seed in [1, 2] {
            let h = random_grouplike(Alphabet::A012, 3, seed);
            let left = check_pent_left(&h, 3, &expander);
            assert!(
                left.pass,
                "left lemma failed at seed {seed}: {}",
                left.max_residual
            );
            let right = check_pent_right(&h, 3, &expander);
            assert!(
                right.pass,
                "right lemma failed at seed {seed}: {}",
                right.max_residual
            );
        }
    }

    #[test]
    fn pent_lemmas_trivial_h() {
        let expander = PsiExpander::new();
        let one = QSeries::one(Alphabet::A012, 3);
        assert!(check_pent_left(&one, 3, &expander).pass);
        assert!(check_pent_right(&one, 3, &expander).pass);
    }

    #[test]
    fn lambda_lemma_random_h() {
        // The lemma needs vanishing e0 and e1 coefficients (it fails for
        // fully generic h already at weight one), so the exact test family
        // is group-like series without those letters in the Lie part.
        let expander = PsiExpander::new();
        for seed in [9, 10, 11] {
            let h = crate::lyndon::random_grouplike_killing(
                Alphabet::A012,
                3,
                seed,
                &[Letter::E0, Letter::E1],
            );
            let r = check_right_chain_lambda(&h, 3, &expander);
            assert!(
                r.pass,
                "lambda lemma residual {} at seed {seed}",
                r.max_residual
            );
        }
    }

    #[test]
    fn t_involution_properties() {
        let t = 4;
        let h = random_grouplike(Alphabet::A012, t, 13);
        assert_eq!(t_involution(&t_involution(&h)), h);
        // T permutes {e0, e1, e-1, e_inf}: the images sum to zero.
        let e0 = QSeries::from_letter(Alphabet::A012, t, Letter::E0);
        let e1 = QSeries::from_letter(Alphabet::A012, t, Letter::E1);
        let em1 = QSeries::from_letter(Alphabet::A012, t, Letter::Em1);
        let e_inf = e0.add(&e1).add(&em1).neg();
        let total = t_involution(&e0)
            .add(&t_involution(&e1))
            .add(&t_involution(&em1))
            .add(&t_involution(&e_inf));
        assert!(total.is_zero());
    }

    #[test]
    fn grtm_trivial_h() {
        let t = 3;
        let one = QSeries::one(Alphabet::A012, t);
        let e0 = QSeries::from_letter(Alphabet::A012, t, Letter::E0);
        let (c3, _c4) = grtm_conditions(&one, Some(&e0)).unwrap();
        assert!(c3.is_zero());
        // Without a sigma(e0) configuration the conditions are unavailable.
        assert!(grtm_conditions(&one, None).is_err());
    }
}
