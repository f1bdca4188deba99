//! The vectorized, whitened regression problem.
//!
//! With `L = half` (so that `L L' = Σ⁻¹`), the model `Y = XB + E` becomes
//! `vec(Y L) = (L' ⊗ X) vec(B) + vec(E L)`. The design is kept implicit; the
//! solver only needs `Σ⁻¹`, `X'X` and `vec(X' Y Σ⁻¹)`.
//!
//! Coordinate `j` of `vec(B)` (zero-based) is entry `(r, k)` of `B` with
//! `k = j / p` and `r = j % p`.

use crate::covariance::PrecisionFactor;
use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix, KroneckerOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemShape {
    pub n: usize,
    pub p: usize,
    pub q: usize,
}

impl ProblemShape {
    pub fn new(n: usize, p: usize, q: usize) -> Result<Self> {
        if n == 0 || p == 0 || q == 0 {
            return Err(Error::DimensionMismatch(format!(
                "all dimensions must be positive (n={n}, p={p}, q={q})"
            )));
        }
        Ok(Self { n, p, q })
    }

    /// Number of coefficients, `pq`.
    pub fn n_coef(&self) -> usize {
        self.p * self.q
    }

    /// `(row r, column k)` of `B` for coordinate `j`.
    pub fn coordinate(&self, j: usize) -> (usize, usize) {
        (j % self.p, j / self.p)
    }

    pub fn index(&self, r: usize, k: usize) -> usize {
        k * self.p + r
    }
}

#[derive(Debug, Clone)]
pub struct VectorizedProblem {
    shape: ProblemShape,
    design_op: KroneckerOperator,
    y_vec: Vec<f64>,
    y_norm2: f64,
    gram_left: DenseMatrix,
    gram_right: DenseMatrix,
    xty: Vec<f64>,
}

impl VectorizedProblem {
    pub fn shape(&self) -> ProblemShape {
        self.shape
    }

    pub fn design_op(&self) -> &KroneckerOperator {
        &self.design_op
    }

    pub fn y_vec(&self) -> &[f64] {
        &self.y_vec
    }

    /// `‖𝒴‖²`.
    pub fn y_norm2(&self) -> f64 {
        self.y_norm2
    }

    /// `Σ⁻¹` as `half · half'`.
    pub fn gram_left(&self) -> &DenseMatrix {
        &self.gram_left
    }

    /// `X'X`.
    pub fn gram_right(&self) -> &DenseMatrix {
        &self.gram_right
    }

    /// `𝒳'𝒴 = vec(X' Y Σ⁻¹)`.
    pub fn xty(&self) -> &[f64] {
        &self.xty
    }

    /// Entry `(i, j)` of `𝒳'𝒳 = Σ⁻¹ ⊗ X'X`.
    pub fn gram_entry(&self, i: usize, j: usize) -> f64 {
        let (ri, ki) = self.shape.coordinate(i);
        let (rj, kj) = self.shape.coordinate(j);
        self.gram_left[(ki, kj)] * self.gram_right[(ri, rj)]
    }

    /// `𝒳'𝒳 v` through the Kronecker structure: `vec(X'X · V · Σ⁻¹)`.
    pub fn gram_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let ProblemShape { p, q, .. } = self.shape;
        let m = DenseMatrix::from_col_major(p, q, v)?;
        Ok(self.gram_right.matmul(&m)?.matmul(&self.gram_left)?.vec())
    }

    /// `𝒳'(𝒴 − 𝒳β)` through the Kronecker Gram.
    pub fn correlation(&self, beta: &[f64]) -> Result<Vec<f64>> {
        let g = self.gram_apply(beta)?;
        Ok(self.xty.iter().zip(g).map(|(a, b)| a - b).collect())
    }

    /// Smallest `λ` for which the zero vector solves the LASSO, `2‖𝒳'𝒴‖_∞`.
    pub fn lambda_max(&self) -> f64 {
        2.0 * self.xty.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `‖𝒴 − 𝒳β‖²` computed from the Gram quantities.
    pub fn loss(&self, beta: &[f64]) -> Result<f64> {
        let g = self.gram_apply(beta)?;
        Ok(self.y_norm2 - 2.0 * dot(beta, &self.xty) + dot(beta, &g))
    }
}

pub fn build_problem(
    y: &DenseMatrix,
    x: &DenseMatrix,
    factor: &PrecisionFactor,
) -> Result<VectorizedProblem> {
    let shape = ProblemShape::new(x.rows(), x.cols(), y.cols())?;
    if y.rows() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "Y has {} rows but X has {}",
            y.rows(),
            x.rows()
        )));
    }
    if factor.dim() != shape.q {
        return Err(Error::DimensionMismatch(format!(
            "whitening factor is {0}x{0} but Y has {1} columns",
            factor.dim(),
            shape.q
        )));
    }
    let half = factor.half();
    let y_white = y.matmul(half)?;
    let y_vec = y_white.vec();
    let y_norm2 = dot(&y_vec, &y_vec);
    let gram_left = half.matmul_t(half)?;
    let gram_right = x.t_matmul(x)?;
    let xty = x.t_matmul(&y_white)?.matmul_t(half)?.vec();
    Ok(VectorizedProblem {
        shape,
        design_op: KroneckerOperator::new(half.transpose(), x.clone()),
        y_vec,
        y_norm2,
        gram_left,
        gram_right,
        xty,
    })
}

/// `𝒴 − 𝒳β` through the implicit operator.
pub fn residual_vector(prob: &VectorizedProblem, beta: &[f64]) -> Result<Vec<f64>> {
    if beta.len() != prob.shape.n_coef() {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {} but pq = {}",
            beta.len(),
            prob.shape.n_coef()
        )));
    }
    let fit = prob.design_op.apply(beta)?;
    Ok(prob.y_vec.iter().zip(fit).map(|(y, f)| y - f).collect())
}
