//! Independent reference implementations shared by the integration suites.
//!
//! Everything here works on plain `Vec<Vec<f64>>` and materialized matrices so
//! that it shares no code path with the crate's structured solvers.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wlasso::covariance::{build_precision, CovarianceModel};
use wlasso::linalg::{kron, DenseMatrix};
use wlasso::whitening::{build_problem, VectorizedProblem};

pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| normal(rng))
}

pub fn to_dense(m: &DenseMatrix) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn gauss_solve(a: &Dense, b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Dense = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs()))?;
        if m[piv][c].abs() < 1e-13 {
            return None;
        }
        m.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Random stationary noise model of dimension `q`.
pub fn random_model<R: Rng>(rng: &mut R, q: usize) -> CovarianceModel {
    let sigma2 = rng.random_range(0.5..2.0);
    if rng.random_bool(0.5) {
        CovarianceModel::ar1(rng.random_range(-0.9..0.9), sigma2, q).unwrap()
    } else {
        let a = rng.random_range(-0.5..0.5);
        let b = rng.random_range(-0.3..0.3);
        CovarianceModel::arm(vec![a, b], sigma2, q).unwrap()
    }
}

/// A whitened problem together with its materialized design and response.
pub struct Instance {
    pub prob: VectorizedProblem,
    /// `(half)' ⊗ X`, materialized.
    pub design: Dense,
    /// `vec(Y · half)`.
    pub y_vec: Vec<f64>,
}

impl Instance {
    pub fn new(y: &DenseMatrix, x: &DenseMatrix, model: &CovarianceModel) -> Self {
        let factor = build_precision(model).unwrap();
        let prob = build_problem(y, x, &factor).unwrap();
        let design = to_dense(&kron(&factor.half().transpose(), x));
        let y_vec = y.matmul(factor.half()).unwrap().vec();
        Self { prob, design, y_vec }
    }

    pub fn random<R: Rng>(rng: &mut R, n: usize, p: usize, q: usize) -> Self {
        let x = random_matrix(rng, n, p);
        let y = random_matrix(rng, n, q);
        let model = random_model(rng, q);
        Self::new(&y, &x, &model)
    }

    pub fn dim(&self) -> usize {
        self.design[0].len()
    }

    /// `𝒳'𝒳`, materialized.
    pub fn gram(&self) -> Dense {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.design.iter().map(|r| r[i] * r[j]).sum()).collect())
            .collect()
    }

    /// `𝒳'𝒴`, materialized.
    pub fn xty(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| self.design.iter().zip(&self.y_vec).map(|(r, y)| r[j] * y).sum())
            .collect()
    }

    /// `2 𝒳'(𝒴 − 𝒳β)`, materialized.
    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        let resid: Vec<f64> = self
            .design
            .iter()
            .zip(&self.y_vec)
            .map(|(r, y)| y - r.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        (0..self.dim())
            .map(|j| 2.0 * self.design.iter().zip(&resid).map(|(r, e)| r[j] * e).sum::<f64>())
            .collect()
    }

    /// Largest violation of the subgradient optimality conditions.
    pub fn kkt(&self, beta: &[f64], lambda: f64) -> f64 {
        self.gradient(beta)
            .iter()
            .zip(beta)
            .map(|(&g, &b)| {
                if b != 0.0 {
                    (g - lambda * b.signum()).abs()
                } else {
                    (g.abs() - lambda).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn objective(&self, beta: &[f64], lambda: f64) -> f64 {
        let loss: f64 = self
            .design
            .iter()
            .zip(&self.y_vec)
            .map(|(r, y)| (y - r.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()).powi(2))
            .sum();
        loss + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }
}

/// Exhaustive LASSO oracle: for every sign pattern in `{−1, 0, 1}^d`, solve the
/// stationarity equations on the pattern's support and keep the consistent
/// candidate with the smallest objective.
pub fn brute_force_lasso(inst: &Instance, lambda: f64) -> Vec<f64> {
    let d = inst.dim();
    let gram = inst.gram();
    let xty = inst.xty();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(d as u32) {
        let mut c = code;
        let signs: Vec<i32> = (0..d)
            .map(|_| {
                let s = (c % 3) as i32 - 1;
                c /= 3;
                s
            })
            .collect();
        let support: Vec<usize> = (0..d).filter(|&j| signs[j] != 0).collect();
        let a: Dense = support
            .iter()
            .map(|&i| support.iter().map(|&j| gram[i][j]).collect())
            .collect();
        let rhs: Vec<f64> = support
            .iter()
            .map(|&j| xty[j] - 0.5 * lambda * f64::from(signs[j]))
            .collect();
        let Some(sol) = (if support.is_empty() { Some(vec![]) } else { gauss_solve(&a, &rhs) }) else {
            continue;
        };
        if sol.iter().zip(&support).any(|(v, &j)| v.signum() != f64::from(signs[j]) || *v == 0.0) {
            continue;
        }
        let mut beta = vec![0.0; d];
        for (&j, v) in support.iter().zip(sol) {
            beta[j] = v;
        }
        let obj = inst.objective(&beta, lambda);
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, beta));
        }
    }
    best.expect("the zero pattern or some support is always consistent").1
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
