//! Exact-arithmetic engine for level-2 confluence relations and
//! Grothendieck-Teichmuller pairing verification.
//!
//! The crate is organized around one universal container: weight-graded
//! sparse series over exact rationals in a free non-commutative algebra
//! ([`series::Series`]). Everything else is built on top of it:
//!
//! * [`word`], [`series`], [`regularize`] — words, shuffle/concatenation
//!   products, the pairing convention, shuffle regularization, exp/log and
//!   group-like tests.
//! * [`lyndon`] — Lyndon-basis Lie elements and seeded random group-like
//!   series for exact "any h" tests.
//! * [`qlinalg`] — exact rational matrices: rref, rank, kernel, and
//!   decomposition of a series in a given basis.
//! * [`bigfloat`], [`zoracle`] — high-precision evaluation of alternating
//!   Euler sums (iterated integrals with letters 0, ±1) and the numeric
//!   Euler-sum series.
//! * [`confluence`] — the relation generator: the maps varrho, dist, w-star,
//!   theta, the pluggable varsigma, wp, the d/dc derivations, reg_{z->0},
//!   phi, and the confluence relation family.
//! * [`dualpair`] — the dual-space engine over the braid-type algebra on
//!   four strands: substitution morphisms, configuration symbols, dlog form
//!   vectors, and the pairing of truncated series against them.
//! * [`gtverify`] — verification suites: the tau_z differential identity,
//!   mixed-pentagon pairing lemmas, Broadhurst duality, distribution and
//!   duality checks, and membership-condition residuals.

pub mod bigfloat;
pub mod confluence;
pub mod dualpair;
pub mod gtverify;
pub mod lyndon;
pub mod qlinalg;
pub mod rational;
pub mod regularize;
pub mod report;
pub mod series;
pub mod word;
pub mod zoracle;

pub use bigfloat::{BigFixed, NumericValue};
pub use qlinalg::QMatrix;
pub use rational::Q;
pub use report::CheckReport;
pub use series::{QSeries, Series};
pub use word::{Alphabet, Generator, Letter, Word};
