//! Dense and structured linear algebra shared by the rest of the crate.
//!
//! Matrices are stored row-major. Vectorization (`vec`) is column-major, so
//! that `(A ⊗ B) vec(M) = vec(B M A')` holds for the Kronecker operator.

use std::ops::{Index, IndexMut};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative pivot threshold for Cholesky, measured against the mean diagonal.
pub const PIVOT_EPS: f64 = 1e-12;

/// A dense real matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices; all rows must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Rebuilds a `rows x cols` matrix from its column-major vectorization.
    pub fn from_col_major(rows: usize, cols: usize, v: &[f64]) -> Result<Self> {
        if v.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} cannot be reshaped to {rows}x{cols}",
                v.len()
            )));
        }
        Ok(Self::from_fn(rows, cols, |i, j| v[j * rows + i]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Column-major vectorization.
    pub fn vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self[(i, j)]);
            }
        }
        v
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(l)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self' * other` without forming the transpose.
    pub fn t_matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply ({}x{})' by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for l in 0..self.rows {
            let b_row = other.row(l);
            for (i, &a) in self.row(l).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * other'` without forming the transpose.
    pub fn matmul_t(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by ({}x{})'",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.rows, |i, j| {
            dot(self.row(i), other.row(j))
        }))
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for a matrix with {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Largest absolute entrywise difference; infinite when shapes differ.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Submatrix with the given row and column index sets.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Symmetric Toeplitz matrix given by its first row `(r_0, ..., r_{q-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricToeplitz {
    first_row: Vec<f64>,
}

impl SymmetricToeplitz {
    pub fn new(first_row: Vec<f64>) -> Result<Self> {
        match first_row.first() {
            None => Err(Error::InvalidModel("empty Toeplitz first row".into())),
            Some(&r0) if !(r0 > 0.0) => Err(Error::InvalidModel(format!(
                "Toeplitz diagonal must be positive, got {r0}"
            ))),
            _ if first_row.iter().any(|v| !v.is_finite()) => {
                Err(Error::InvalidModel("non-finite autocovariance".into()))
            }
            _ => Ok(Self { first_row }),
        }
    }

    pub fn dim(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn materialize(&self) -> DenseMatrix {
        let q = self.dim();
        DenseMatrix::from_fn(q, q, |i, j| self.first_row[i.abs_diff(j)])
    }
}

/// Implicit `left ⊗ right` acting on column-major vectorized matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerOperator {
    left: DenseMatrix,
    right: DenseMatrix,
}

impl KroneckerOperator {
    pub fn new(left: DenseMatrix, right: DenseMatrix) -> Self {
        Self { left, right }
    }

    pub fn left(&self) -> &DenseMatrix {
        &self.left
    }

    pub fn right(&self) -> &DenseMatrix {
        &self.right
    }

    /// Shape of the (never materialized) product.
    pub fn shape(&self) -> (usize, usize) {
        (
            self.left.rows() * self.right.rows(),
            self.left.cols() * self.right.cols(),
        )
    }

    /// `(left ⊗ right) v`, computed as `vec(right · M · left')` with `v = vec(M)`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        kron_apply(self, v)
    }

    /// `(left ⊗ right)' v = (left' ⊗ right') v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        let (rows, _) = self.shape();
        if v.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "transpose apply expects length {rows}, got {}",
                v.len()
            )));
        }
        let m = DenseMatrix::from_col_major(self.right.rows(), self.left.rows(), v)?;
        Ok(self.right.t_matmul(&m)?.matmul(&self.left)?.vec())
    }

    /// Dense product; for tests and small diagnostics only.
    pub fn materialize(&self) -> DenseMatrix {
        kron(&self.left, &self.right)
    }
}

/// Applies the Kronecker operator to `v` in `O(q²p + qnp)` time.
pub fn kron_apply(op: &KroneckerOperator, v: &[f64]) -> Result<Vec<f64>> {
    let (_, cols) = op.shape();
    if v.len() != cols {
        return Err(Error::DimensionMismatch(format!(
            "Kronecker apply expects length {cols}, got {}",
            v.len()
        )));
    }
    let m = DenseMatrix::from_col_major(op.right.cols(), op.left.cols(), v)?;
    Ok(op.right.matmul(&m)?.matmul_t(&op.left)?.vec())
}

/// Dense Kronecker product `a ⊗ b`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (br, bc) = (b.rows(), b.cols());
    DenseMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Lower Cholesky factor `L` with `L L' = S`.
///
/// Only the lower triangle of `S` is read. Fails when a pivot drops below
/// `PIVOT_EPS` times the mean diagonal.
pub fn cholesky_lower(s: &DenseMatrix) -> Result<DenseMatrix> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Cholesky of a non-square {}x{} matrix",
            s.rows(),
            s.cols()
        )));
    }
    let n = s.rows();
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    let threshold = PIVOT_EPS * (s.trace() / n as f64).abs();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let pivot = s[(j, j)] - l.row(j)[..j].iter().map(|v| v * v).sum::<f64>();
        if !(pivot > threshold) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let acc = s[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = acc / d;
        }
    }
    Ok(l)
}

/// Solves `L L' x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = l.rows();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side of length {} for a {n}x{n} factor",
            b.len()
        )));
    }
    let mut y = b.to_vec();
    for i in 0..n {
        y[i] = (y[i] - dot(&l.row(i)[..i], &y[..i])) / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in i + 1..n {
            acc -= l[(k, i)] * y[k];
        }
        y[i] = acc / l[(i, i)];
    }
    Ok(y)
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky factor.
pub fn spd_inverse(s: &DenseMatrix) -> Result<DenseMatrix> {
    let l = cholesky_lower(s)?;
    let n = s.rows();
    let mut inv = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = cholesky_solve(&l, &e)?;
        for (i, v) in col.into_iter().enumerate() {
            inv[(i, j)] = v;
        }
    }
    // symmetrize away rounding asymmetry
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = avg;
            inv[(j, i)] = avg;
        }
    }
    Ok(inv)
}

/// `Π = I − X(X'X)⁻¹X'`, the projector onto the orthogonal complement of col(X).
pub fn projection_complement(x: &DenseMatrix) -> Result<DenseMatrix> {
    let (n, p) = (x.rows(), x.cols());
    if p > n {
        return Err(Error::RankDeficient);
    }
    let l = gram_cholesky(x)?;
    // H = X (X'X)⁻¹ X', built column by column from solves against X' rows.
    let mut w = DenseMatrix::zeros(p, n);
    for i in 0..n {
        let sol = cholesky_solve(&l, x.row(i))?;
        for (r, v) in sol.into_iter().enumerate() {
            w[(r, i)] = v;
        }
    }
    let hat = x.matmul(&w)?;
    let mut pi = DenseMatrix::identity(n).sub(&hat)?;
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (pi[(i, j)] + pi[(j, i)]);
            pi[(i, j)] = avg;
            pi[(j, i)] = avg;
        }
    }
    Ok(pi)
}

/// `Y − X(X'X)⁻¹X'Y` computed in `O(npq)` without forming the projector.
pub fn project_out(x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows but Y has {}",
            x.rows(),
            y.rows()
        )));
    }
    if x.cols() > x.rows() {
        return Err(Error::RankDeficient);
    }
    let l = gram_cholesky(x)?;
    let xty = x.t_matmul(y)?;
    let mut coef = DenseMatrix::zeros(x.cols(), y.cols());
    for k in 0..y.cols() {
        let sol = cholesky_solve(&l, &xty.column(k))?;
        for (r, v) in sol.into_iter().enumerate() {
            coef[(r, k)] = v;
        }
    }
    y.sub(&x.matmul(&coef)?)
}

fn gram_cholesky(x: &DenseMatrix) -> Result<DenseMatrix> {
    let gram = x.t_matmul(x)?;
    cholesky_lower(&gram).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::RankDeficient,
        other => other,
    })
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(s: &DenseMatrix) -> Result<Vec<f64>> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch("eigenvalues of a non-square matrix".into()));
    }
    if s.rows() == 0 {
        return Ok(Vec::new());
    }
    let mut ev: Vec<f64> = s.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Solves a general square system by LU with partial pivoting.
pub fn solve_dense(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if !a.is_square() || b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "system {}x{} with right-hand side of length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    a.to_nalgebra()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .map(|x| x.iter().copied().collect())
        .ok_or(Error::InvalidModel("singular linear system".into()))
}
