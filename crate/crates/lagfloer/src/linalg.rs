//! Dense exact linear algebra over a field.
//!
//! Row reduction always picks the leftmost available pivot and the first
//! nonzero row below it, so every derived basis is reproducible.

use std::ops::Neg;

use num_traits::Num;

/// Scalars admitting exact Gaussian elimination.
pub trait Field: Num + Clone + Neg<Output = Self> {}

impl<T: Num + Clone + Neg<Output = T>> Field for T {}

/// A dense `rows × cols` matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix<F> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<F>>,
}

impl<F: Field> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![vec![F::zero(); cols]; rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i][i] = F::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>, cols: usize) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows,
        }
    }

    /// The matrix whose columns are the given vectors of length `rows`.
    pub fn from_columns(columns: &[Vec<F>], rows: usize) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "column of wrong length");
            for (i, x) in c.iter().enumerate() {
                m.data[i][j] = x.clone();
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        self.data.iter().map(|r| r[j].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j][i] = self.data[i][j].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.data[i][k].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    if !other.data[k][j].is_zero() {
                        let p = self.data[i][k].clone() * other.data[k][j].clone();
                        out.data[i][j] = out.data[i][j].clone() + p;
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        self.data
            .iter()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(F::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.iter().all(|x| x.is_zero()))
    }
}

/// Reduced row echelon form and the pivot column of each nonzero row.
pub fn rref<F: Field>(m: &Matrix<F>) -> (Matrix<F>, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..a.cols {
        if r == a.rows {
            break;
        }
        let Some(p) = (r..a.rows).find(|&i| !a.data[i][c].is_zero()) else {
            continue;
        };
        a.data.swap(r, p);
        let inv = F::one() / a.data[r][c].clone();
        for x in a.data[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..a.rows {
            if i != r && !a.data[i][c].is_zero() {
                let f = a.data[i][c].clone();
                for j in 0..a.cols {
                    if !a.data[r][j].is_zero() {
                        let sub = f.clone() * a.data[r][j].clone();
                        a.data[i][j] = a.data[i][j].clone() - sub;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

pub fn rank<F: Field>(m: &Matrix<F>) -> usize {
    rref(m).1.len()
}

/// A basis of `{x : m x = 0}`, one vector per free column, with that free
/// coordinate equal to 1 and the other free coordinates 0.
pub fn kernel<F: Field>(m: &Matrix<F>) -> Vec<Vec<F>> {
    let (r, pivots) = rref(m);
    let mut out = Vec::new();
    for free in (0..m.cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![F::zero(); m.cols];
        v[free] = F::one();
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = -r.data[row][free].clone();
        }
        out.push(v);
    }
    out
}

/// The free (non-pivot) columns of the reduced form.
pub fn free_columns<F: Field>(m: &Matrix<F>) -> Vec<usize> {
    let pivots = rref(m).1;
    (0..m.cols).filter(|c| !pivots.contains(c)).collect()
}

/// A solution of `m x = b` with all free coordinates zero, if one exists.
pub fn solve<F: Field>(m: &Matrix<F>, b: &[F]) -> Option<Vec<F>> {
    assert_eq!(m.rows, b.len(), "dimension mismatch");
    let mut aug = Matrix::zeros(m.rows, m.cols + 1);
    for i in 0..m.rows {
        for j in 0..m.cols {
            aug.data[i][j] = m.data[i][j].clone();
        }
        aug.data[i][m.cols] = b[i].clone();
    }
    let (r, pivots) = rref(&aug);
    if pivots.last() == Some(&m.cols) {
        return None;
    }
    let mut x = vec![F::zero(); m.cols];
    for (row, &pc) in pivots.iter().enumerate() {
        x[pc] = r.data[row][m.cols].clone();
    }
    Some(x)
}

/// Whether `v` lies in the span of the columns of `m`.
pub fn in_column_space<F: Field>(m: &Matrix<F>, v: &[F]) -> bool {
    solve(m, v).is_some()
}

/// The inverse of a square matrix, if it is invertible.
pub fn inverse<F: Field>(m: &Matrix<F>) -> Option<Matrix<F>> {
    assert_eq!(m.rows, m.cols, "inverse of a non-square matrix");
    let n = m.rows;
    if n == 0 {
        return Some(Matrix::zeros(0, 0));
    }
    let mut aug = Matrix::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug.data[i][j] = m.data[i][j].clone();
        }
        aug.data[i][n + i] = F::one();
    }
    let (r, pivots) = rref(&aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    let mut inv = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv.data[i][j] = r.data[i][n + j].clone();
        }
    }
    Some(inv)
}

/// Column indices of a maximal linearly independent prefix-greedy subset.
pub fn independent_columns<F: Field>(m: &Matrix<F>) -> Vec<usize> {
    rref(m).1
}
