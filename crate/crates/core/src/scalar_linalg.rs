//! Exact rational scalars and sparse linear algebra over the rationals.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

/// Arbitrary-precision rational, always reduced with a positive denominator.
pub type Rational = num_rational::BigRational;

/// Sparse vector: column index to nonzero value.
pub type SparseVec = BTreeMap<usize, Rational>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(pub String);

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"3"`, `"-1/2"` or `"+7/4"`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let t = s.trim();
    let err = || ParseRationalError(s.to_string());
    let t = t.strip_prefix('+').unwrap_or(t);
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| err())?;
    let d: BigInt = d.parse().map_err(|_| err())?;
    if d.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(n, d))
}

/// Renders as `"p"` or `"p/q"`.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatrixError {
    #[error("entry ({row},{col}) outside a {rows}x{cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("duplicate entry at ({row},{col})")]
    Duplicate { row: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Row-major sparse matrix with no stored zeros.
#[derive(Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<SparseVec>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            data: vec![SparseVec::new(); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i].insert(i, rat(1));
        }
        m
    }

    /// Builds a matrix from (row, col, value) triples, rejecting duplicates; zero values are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, Rational)>,
    ) -> Result<Self, MatrixError> {
        let mut m = Self::zeros(rows, cols);
        for (r, c, v) in entries {
            if r >= rows || c >= cols {
                return Err(MatrixError::OutOfBounds {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
            if m.data[r].contains_key(&c) {
                return Err(MatrixError::Duplicate { row: r, col: c });
            }
            if !v.is_zero() {
                m.data[r].insert(c, v);
            }
        }
        Ok(m)
    }

    pub fn from_dense(rows: &[Vec<Rational>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged dense matrix");
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    m.data[i].insert(j, v.clone());
                }
            }
        }
        m
    }

    /// Adds `v` to entry (r, c), removing it if the sum vanishes.
    pub fn add_to(&mut self, r: usize, c: usize, v: &Rational) {
        assert!(r < self.rows && c < self.cols, "entry outside matrix");
        let slot = self.data[r].entry(c).or_insert_with(Rational::zero);
        *slot += v;
        if slot.is_zero() {
            self.data[r].remove(&c);
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(|r| r.len()).sum()
    }

    pub fn row(&self, r: usize) -> &SparseVec {
        &self.data[r]
    }

    pub fn get(&self, r: usize, c: usize) -> Rational {
        self.data[r].get(&c).cloned().unwrap_or_else(Rational::zero)
    }

    /// All entries in row-major order.
    pub fn entries(&self) -> Vec<(usize, usize, Rational)> {
        let mut out = Vec::with_capacity(self.nnz());
        for (r, row) in self.data.iter().enumerate() {
            for (c, v) in row {
                out.push((r, *c, v.clone()));
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.is_empty())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for (r, row) in self.data.iter().enumerate() {
            for (c, v) in row {
                t.data[*c].insert(r, v.clone());
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (r, row) in self.data.iter().enumerate() {
            let mut acc = Rational::zero();
            for (c, a) in row {
                if let Some(b) = v.get(c) {
                    acc += a * b;
                }
            }
            if !acc.is_zero() {
                out.insert(r, acc);
            }
        }
        out
    }

    pub fn mul(&self, other: &SparseMatrix) -> Result<SparseMatrix, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for (r, row) in self.data.iter().enumerate() {
            let acc = &mut out.data[r];
            for (k, a) in row {
                for (c, b) in &other.data[*k] {
                    let slot = acc.entry(*c).or_insert_with(Rational::zero);
                    *slot += a * b;
                }
            }
            acc.retain(|_, v| !v.is_zero());
        }
        Ok(out)
    }

    /// Stacks the rows of `other` below `self`.
    pub fn vstack(&self, other: &SparseMatrix) -> Result<SparseMatrix, MatrixError> {
        if self.cols != other.cols {
            return Err(MatrixError::Dimension(format!(
                "cannot stack {} columns on {} columns",
                other.cols, self.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Ok(SparseMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }
}

impl fmt::Debug for SparseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SparseMatrix {}x{} [", self.rows, self.cols)?;
        for (r, row) in self.data.iter().enumerate() {
            if row.is_empty() {
                continue;
            }
            let cells: Vec<String> = row
                .iter()
                .map(|(c, v)| format!("{c}:{}", format_rational(v)))
                .collect();
            writeln!(f, "  {r}: {}", cells.join(" "))?;
        }
        write!(f, "]")
    }
}

type IntRow = BTreeMap<usize, BigInt>;

/// Clears denominators and divides out the content, keeping only the direction of the row.
fn primitive_int_row(row: &SparseVec) -> IntRow {
    let mut l = BigInt::one();
    for v in row.values() {
        l = l.lcm(v.denom());
    }
    let mut out: IntRow = row
        .iter()
        .map(|(c, v)| (*c, v.numer() * (&l / v.denom())))
        .collect();
    make_primitive(&mut out);
    out
}

fn make_primitive(row: &mut IntRow) {
    let mut g = BigInt::zero();
    for v in row.values() {
        g = g.gcd(v);
        if g.is_one() {
            return;
        }
    }
    if !g.is_zero() && !g.is_one() {
        for v in row.values_mut() {
            *v /= &g;
        }
    }
}

/// Pivot preference: smaller leading entry first, then sparser rows.
fn pivot_cost(row: &IntRow, col: usize) -> (u64, usize) {
    (row[&col].bits(), row.len())
}

/// Rank over the rationals by fraction-free integer elimination.
///
/// Rows are scaled to primitive integer vectors. Each step takes the pending row with the
/// smallest leading entry as pivot, cross-multiplies it into the rows sharing its leading
/// column and strips the content of each updated row, so entries stay integral and small.
pub fn rank(m: &SparseMatrix) -> usize {
    let mut buckets: BTreeMap<usize, Vec<IntRow>> = BTreeMap::new();
    for row in &m.data {
        if let Some((&lead, _)) = row.iter().next() {
            buckets
                .entry(lead)
                .or_default()
                .push(primitive_int_row(row));
        }
    }
    let mut r = 0;
    while let Some((col, mut rows)) = buckets.pop_first() {
        let best = (0..rows.len())
            .min_by_key(|&i| pivot_cost(&rows[i], col))
            .expect("bucket is never empty");
        let pivot = rows.swap_remove(best);
        r += 1;
        let p = pivot[&col].clone();
        for mut row in rows {
            let q = row[&col].clone();
            for v in row.values_mut() {
                *v *= &p;
            }
            for (c, pv) in &pivot {
                let slot = row.entry(*c).or_insert_with(BigInt::zero);
                *slot -= &q * pv;
            }
            row.retain(|_, v| !v.is_zero());
            if let Some((&lead, _)) = row.iter().next() {
                make_primitive(&mut row);
                buckets.entry(lead).or_default().push(row);
            }
        }
    }
    r
}

/// Reduced row echelon form over the rationals; returns the nonzero rows and their pivot columns.
fn rref(m: &SparseMatrix) -> (Vec<SparseVec>, Vec<usize>) {
    let mut rows: Vec<SparseVec> = m.data.iter().filter(|r| !r.is_empty()).cloned().collect();
    let mut done: Vec<SparseVec> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    while !rows.is_empty() {
        let col = rows
            .iter()
            .map(|r| *r.keys().next().unwrap())
            .min()
            .unwrap();
        let idx = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.keys().next() == Some(&col))
            .min_by_key(|(_, r)| r.len())
            .map(|(i, _)| i)
            .unwrap();
        let mut pivot = rows.swap_remove(idx);
        let inv = pivot[&col].recip();
        for v in pivot.values_mut() {
            *v *= &inv;
        }
        let eliminate = |row: &mut SparseVec| {
            if let Some(f) = row.get(&col).cloned() {
                for (c, pv) in &pivot {
                    let slot = row.entry(*c).or_insert_with(Rational::zero);
                    *slot -= &f * pv;
                }
                row.retain(|_, v| !v.is_zero());
            }
        };
        rows.iter_mut().for_each(eliminate);
        done.iter_mut().for_each(eliminate);
        rows.retain(|r| !r.is_empty());
        done.push(pivot);
        pivots.push(col);
    }
    (done, pivots)
}

/// A basis of the right kernel `{v : m v = 0}`, one vector per non-pivot column.
pub fn kernel_basis(m: &SparseMatrix) -> Vec<SparseVec> {
    let (rows, pivots) = rref(m);
    let pivot_set: BTreeMap<usize, usize> =
        pivots.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut basis = Vec::new();
    for free in 0..m.cols {
        if pivot_set.contains_key(&free) {
            continue;
        }
        let mut v = SparseVec::new();
        v.insert(free, rat(1));
        for (row, pc) in rows.iter().zip(&pivots) {
            if let Some(a) = row.get(&free) {
                v.insert(*pc, -a.clone());
            }
        }
        basis.push(v);
    }
    basis
}

/// Rank computed through the rational reduced echelon form; an independent route to [`rank`].
pub fn rank_rref(m: &SparseMatrix) -> usize {
    rref(m).1.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(rows: &[&[i64]]) -> SparseMatrix {
        SparseMatrix::from_dense(
            &rows
                .iter()
                .map(|r| r.iter().map(|&x| rat(x)).collect())
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn identity_and_zero_ranks() {
        assert_eq!(rank(&SparseMatrix::identity(2)), 2);
        assert_eq!(rank(&SparseMatrix::zeros(3, 4)), 0);
        assert!(kernel_basis(&SparseMatrix::identity(3)).is_empty());
    }

    #[test]
    fn one_by_two_kernel_is_diagonal() {
        let k = kernel_basis(&dense(&[&[1, -1]]));
        assert_eq!(k.len(), 1);
        assert_eq!(k[0].get(&0), k[0].get(&1));
    }

    #[test]
    fn rational_entries_are_cleared() {
        let m = SparseMatrix::from_dense(&[vec![frac(1, 2), frac(1, 3)], vec![frac(3, 2), rat(1)]]);
        assert_eq!(rank(&m), 1);
    }

    #[test]
    fn duplicate_triplets_rejected() {
        let e = SparseMatrix::from_triplets(2, 2, vec![(0, 0, rat(1)), (0, 0, rat(2))]);
        assert_eq!(e, Err(MatrixError::Duplicate { row: 0, col: 0 }));
        assert!(SparseMatrix::from_triplets(1, 1, vec![(1, 0, rat(1))]).is_err());
    }

    #[test]
    fn rational_literals() {
        assert_eq!(parse_rational("-1/2").unwrap(), frac(-1, 2));
        assert_eq!(parse_rational(" 4/6 ").unwrap(), frac(2, 3));
        assert_eq!(format_rational(&frac(4, -6)), "-2/3");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn large_entries_stay_exact() {
        // Vandermonde-like rows with big entries: full rank.
        let rows: Vec<Vec<Rational>> = (1..=6)
            .map(|i| (0..6).map(|j| rat(i * 1000 + 7).pow(j)).collect())
            .collect();
        let m = SparseMatrix::from_dense(&rows);
        assert_eq!(rank(&m), 6);
        assert_eq!(rank_rref(&m), 6);
    }

    fn small_matrix() -> impl Strategy<Value = SparseMatrix> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(-3i64..=3, c), r).prop_map(
                move |rows| {
                    // Bias towards sparsity and rank deficiency.
                    let rows: Vec<Vec<Rational>> = rows
                        .iter()
                        .map(|row| {
                            row.iter()
                                .map(|&x| if x.abs() == 3 { rat(0) } else { frac(x, 2) })
                                .collect()
                        })
                        .collect();
                    SparseMatrix::from_dense(&rows)
                },
            )
        })
    }

    proptest! {
        #[test]
        fn rank_plus_nullity_is_cols(m in small_matrix()) {
            prop_assert_eq!(rank(&m) + kernel_basis(&m).len(), m.cols());
        }

        #[test]
        fn rank_of_transpose(m in small_matrix()) {
            prop_assert_eq!(rank(&m), rank(&m.transpose()));
            prop_assert_eq!(rank(&m), rank_rref(&m));
        }

        #[test]
        fn kernel_vectors_are_annihilated(m in small_matrix()) {
            let k = kernel_basis(&m);
            for v in &k {
                prop_assert!(m.mul_vec(v).is_empty());
            }
            // Independence: stacking the kernel vectors gives full row rank.
            let km = SparseMatrix::from_triplets(
                k.len(), m.cols(),
                k.iter().enumerate().flat_map(|(i, v)| v.iter().map(move |(c, x)| (i, *c, x.clone()))),
            ).unwrap();
            prop_assert_eq!(rank(&km), k.len());
        }
    }
}
