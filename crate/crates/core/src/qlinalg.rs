//! Exact rational dense linear algebra: reduced row-echelon form via
//! fraction-free (Bareiss) elimination, rank, kernel bases, and
//! decomposition of a target vector in a given basis.

use crate::rational::{q_to_string, Q};
use crate::series::QSeries;
use crate::word::Word;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

/// Rectangular matrix over the rationals with optional word column labels.
#[derive(Clone, Debug, PartialEq)]
pub struct QMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Q>,
    pub labels: Option<Vec<Word>>,
}

/// Result of a row reduction: the reduced matrix and its pivot columns.
#[derive(Clone, Debug)]
pub struct Rref {
    pub matrix: QMatrix,
    pub pivots: Vec<usize>,
}

#[derive(thiserror::Error, Debug)]
pub enum DecomposeError {
    #[error(
        "target is not in the span; residual has {nonzero} nonzero entries, max |r| = {max_abs}"
    )]
    NotInSpan { nonzero: usize, max_abs: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl QMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            data: vec![Q::zero(); rows * cols],
            labels: None,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(|v| v.len()).unwrap_or(0);
        assert!(rows.iter().all(|v| v.len() == c), "ragged rows");
        QMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<Word>) -> Self {
        assert_eq!(labels.len(), self.cols);
        let mut distinct = labels.clone();
        distinct.sort();
        distinct.dedup();
        assert_eq!(
            distinct.len(),
            labels.len(),
            "column labels must be distinct"
        );
        self.labels = Some(labels);
        self
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Reduced row-echelon form. Elimination runs fraction-free on an
    /// integerized copy (Bareiss), with a final pass dividing each row by
    /// its pivot; the input is not modified.
    pub fn rref(&self) -> Rref {
        // Integerize row by row.
        let mut m: Vec<Vec<BigInt>> = (0..self.rows)
            .map(|i| {
                let mut lcm = BigInt::one();
                for q in self.row(i) {
                    lcm = lcm.lcm(q.denom());
                }
                self.row(i)
                    .iter()
                    .map(|q| q.numer() * (&lcm / q.denom()))
                    .collect()
            })
            .collect();

        let mut pivots = Vec::new();
        let mut prev_pivot = BigInt::one();
        let mut r = 0usize;
        for c in 0..self.cols {
            // Deterministic pivot: first row with a nonzero entry in column c.
            let Some(p) = (r..self.rows).find(|&i| !m[i][c].is_zero()) else {
                continue;
            };
            m.swap(r, p);
            let pivot = m[r][c].clone();
            for i in (r + 1)..self.rows {
                let factor = m[i][c].clone();
                for j in 0..self.cols {
                    let v = &m[i][j] * &pivot - &factor * &m[r][j];
                    m[i][j] = &v / &prev_pivot;
                }
            }
            prev_pivot = pivot;
            pivots.push(c);
            r += 1;
            if r == self.rows {
                break;
            }
        }

        // Back-substitution and pivot normalization, now over Q.
        let mut out = QMatrix::zero(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = Q::new(m[i][j].clone(), BigInt::one());
            }
        }
        for (rank_i, &pc) in pivots.iter().enumerate().rev() {
            let pv = out[(rank_i, pc)].clone();
            for j in 0..self.cols {
                out[(rank_i, j)] = &out[(rank_i, j)] / &pv;
            }
            for i in 0..rank_i {
                let factor = out[(i, pc)].clone();
                if factor.is_zero() {
                    continue;
                }
                for j in 0..self.cols {
                    let v = &out[(i, j)] - &factor * &out[(rank_i, j)];
                    out[(i, j)] = v;
                }
            }
        }
        out.labels = self.labels.clone();
        Rref {
            matrix: out,
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().pivots.len()
    }

    /// A basis of the right kernel: one vector per free column.
    pub fn kernel_basis(&self) -> Vec<Vec<Q>> {
        let Rref { matrix, pivots } = self.rref();
        let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![Q::zero(); self.cols];
            v[free] = Q::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -matrix[(i, free)].clone();
            }
            basis.push(v);
        }
        basis
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Header row of quoted word labels, body of quoted fraction strings.
    pub fn to_csv(&self) -> String {
        let quote = |s: &str| format!("\"{}\"", s.replace('"', "\"\""));
        let mut out = String::new();
        if let Some(labels) = &self.labels {
            out.push_str(
                &labels
                    .iter()
                    .map(|w| quote(&w.label()))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
        }
        for i in 0..self.rows {
            out.push_str(
                &self
                    .row(i)
                    .iter()
                    .map(|q| quote(&q_to_string(q)))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }
}

/// Write `target` as an exact rational combination of `basis`; the
/// recombination is verified term by term before returning.
pub fn decompose_in_basis(target: &QSeries, basis: &[QSeries]) -> Result<Vec<Q>, DecomposeError> {
    if basis.is_empty() {
        return if target.is_zero() {
            Ok(Vec::new())
        } else {
            Err(DecomposeError::NotInSpan {
                nonzero: target.num_terms(),
                max_abs: target.max_abs(),
            })
        };
    }
    // Row index: every word appearing anywhere.
    let mut words: Vec<Word> = Vec::new();
    for s in basis.iter().chain(std::iter::once(target)) {
        for (w, _) in s.terms() {
            words.push(w.clone());
        }
    }
    words.sort();
    words.dedup();
    let index: std::collections::BTreeMap<&Word, usize> =
        words.iter().enumerate().map(|(i, w)| (w, i)).collect();

    // Augmented system [B | t].
    let mut m = QMatrix::zero(words.len(), basis.len() + 1);
    for (j, s) in basis.iter().enumerate() {
        for (w, c) in s.terms() {
            m[(index[w], j)] = c.clone();
        }
    }
    for (w, c) in target.terms() {
        m[(index[w], basis.len())] = c.clone();
    }

    let Rref { matrix, pivots } = m.rref();
    if pivots.contains(&basis.len()) {
        // The target column is a pivot: inconsistent system.
        let residual = target.num_terms();
        return Err(DecomposeError::NotInSpan {
            nonzero: residual,
            max_abs: target.max_abs(),
        });
    }
    let mut coeffs = vec![Q::zero(); basis.len()];
    for (i, &pc) in pivots.iter().enumerate() {
        coeffs[pc] = matrix[(i, basis.len())].clone();
    }

    // Exact verification of the recombination.
    let mut recombined = QSeries::zero(target.alphabet, target.truncation);
    for (c, s) in coeffs.iter().zip(basis) {
        recombined = recombined.add(&s.scale(c));
    }
    let residual = target.sub(&recombined);
    if !residual.is_zero() {
        return Err(DecomposeError::NotInSpan {
            nonzero: residual.num_terms(),
            max_abs: residual.max_abs(),
        });
    }
    Ok(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q_int, q_ratio};
    use crate::series::Series;
    use crate::word::Alphabet;

    fn m(rows: &[&[i64]]) -> QMatrix {
        QMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| q_int(x)).collect())
                .collect(),
        )
    }

    #[test]
    fn rank_one_example() {
        let a = m(&[&[2, 4], &[1, 2]]);
        let r = a.rref();
        assert_eq!(r.pivots.len(), 1);
        assert_eq!(r.matrix[(0, 0)], q_int(1));
        assert_eq!(r.matrix[(0, 1)], q_int(2));
        assert_eq!(r.matrix[(1, 0)], q_int(0));
        assert_eq!(r.matrix[(1, 1)], q_int(0));
    }

    #[test]
    fn identity_and_zero() {
        assert_eq!(QMatrix::identity(3).rank(), 3);
        assert_eq!(QMatrix::zero(2, 5).rank(), 0);
        let id = QMatrix::identity(3);
        assert_eq!(id.rref().matrix, id);
    }

    #[test]
    fn rref_idempotent_and_rank_transpose() {
        let a = m(&[&[1, 2, 3], &[2, 4, 7], &[0, 1, -1], &[3, 7, 9]]);
        let r = a.rref();
        assert_eq!(r.matrix.rref().matrix, r.matrix);
        assert_eq!(a.rank(), a.transpose().rank());
    }

    #[test]
    fn kernel_annihilates() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 1, 1]]);
        let basis = a.kernel_basis();
        assert_eq!(basis.len(), 3 - a.rank());
        for v in basis {
            assert!(a.mul_vec(&v).iter().all(|q| q.is_zero()));
        }
    }

    #[test]
    fn fractional_entries() {
        let mut a = QMatrix::zero(2, 2);
        a[(0, 0)] = q_ratio(1, 2);
        a[(0, 1)] = q_ratio(1, 3);
        a[(1, 0)] = q_ratio(1, 4);
        a[(1, 1)] = q_ratio(1, 6);
        assert_eq!(a.rank(), 1);
    }

    #[test]
    fn decompose_simple() {
        let alpha = Alphabet::A01;
        let b1 = Series::monomial(alpha, 2, Word::parse("1,0").unwrap(), q_int(1)).add(
            &Series::monomial(alpha, 2, Word::parse("1,1").unwrap(), q_int(-1)),
        );
        let b2 = Series::monomial(alpha, 2, Word::parse("1,0").unwrap(), q_int(1));
        let target = Series::monomial(alpha, 2, Word::parse("1,1").unwrap(), q_int(2));
        let c = decompose_in_basis(&target, &[b1.clone(), b2.clone()]).unwrap();
        assert_eq!(c, vec![q_int(-2), q_int(2)]);

        let outside = Series::monomial(alpha, 2, Word::parse("0,0").unwrap(), q_int(1));
        assert!(decompose_in_basis(&outside, &[b1, b2]).is_err());
    }

    #[test]
    fn csv_quotes_labels() {
        let a = m(&[&[1, -2]]).with_labels(vec![
            Word::parse("1,0").unwrap(),
            Word::parse("0,1").unwrap(),
        ]);
        let csv = a.to_csv();
        assert_eq!(csv, "\"1,0\",\"0,1\"\n\"1\",\"-2\"\n");
    }
}
