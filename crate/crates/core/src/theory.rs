//! Finite-sample audits of the sign-consistency conditions.
//!
//! Everything is computed from `S = 𝒳'𝒳 = Σ⁻¹ ⊗ X'X` entry by entry; the
//! vectorized design is never formed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::SupportSpec;
use crate::linalg::{cholesky_lower, cholesky_solve, symmetric_eigenvalues, DenseMatrix};
use crate::whitening::VectorizedProblem;

/// Irrepresentable-condition quantities on `J^c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ICReport {
    /// `|S_{J^c,J} (S_{J,J})⁻¹ sign(ℬ_J)|`, one entry per index of `J^c` in increasing order.
    pub lhs: Vec<f64>,
    pub max_lhs: f64,
    pub eta: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaWindow {
    pub lower: f64,
    pub upper: f64,
    /// Always true: the penalty-order condition is asymptotic and cannot be
    /// decided at a fixed sample size.
    pub heuristic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionAudit {
    /// `max_j (1/n) 𝒳_j'𝒳_j`.
    pub m1_bound: f64,
    /// `λ_min((𝒳'𝒳)_{J,J}) / n`; zero for an empty support.
    pub m2_bound: f64,
    pub c1: f64,
    pub c2: f64,
    /// `q^{c2} min_{j∈J} |ℬ_j|`, when magnitudes are known.
    pub min_beta_scaled: Option<f64>,
    /// `|J| / q^{c1}`.
    pub sparsity_ratio: f64,
    /// `‖X'X − νI‖_∞ / ν` with `ν` the mean diagonal of `X'X`.
    pub x_orth_defect: f64,
    pub lambda_window: LambdaWindow,
    /// `max_j (1/n) X_j'X_j`.
    pub x_col_norm_max: f64,
    /// `λ_min(X'X / n)`.
    pub x_min_eigenvalue: f64,
    /// `‖X'X / n‖_∞`.
    pub x_gram_inf_norm: f64,
    /// `λ_max(Σ⁻¹)`.
    pub precision_max_eigenvalue: f64,
    /// `λ_min(Σ⁻¹)`.
    pub precision_min_eigenvalue: f64,
    /// Support-placement hypotheses of the closed-form AR(1) bound.
    pub ar1_placement_ok: bool,
}

fn sub_gram(prob: &VectorizedProblem, rows: &[usize], cols: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(rows.len(), cols.len(), |a, b| prob.gram_entry(rows[a], cols[b]))
}

pub fn check_ic(prob: &VectorizedProblem, truth: &SupportSpec) -> Result<ICReport> {
    let dim = prob.shape().n_coef();
    if truth.indices().last().is_some_and(|&j| j >= dim) {
        return Err(Error::DimensionMismatch(format!(
            "support exceeds {dim} coefficients"
        )));
    }
    let support = truth.indices();
    let outside = truth.complement(dim);
    let lhs = if support.is_empty() {
        vec![0.0; outside.len()]
    } else {
        let s_jj = sub_gram(prob, support, support);
        let l = cholesky_lower(&s_jj).map_err(|_| Error::SingularSubGram)?;
        let signs: Vec<f64> = truth.signs().iter().map(|&s| f64::from(s)).collect();
        let w = cholesky_solve(&l, &signs)?;
        outside
            .iter()
            .map(|&i| {
                support
                    .iter()
                    .zip(&w)
                    .map(|(&j, wj)| prob.gram_entry(i, j) * wj)
                    .sum::<f64>()
                    .abs()
            })
            .collect()
    };
    let max_lhs = lhs.iter().copied().fold(0.0, f64::max);
    Ok(ICReport {
        eta: 1.0 - max_lhs,
        holds: max_lhs < 1.0,
        lhs,
        max_lhs,
    })
}

/// `|φ₁| / (1 + φ₁² − |φ₁|)`, the closed-form IC bound for AR(1) noise with
/// `X'X = νI` and a suitably placed support.
pub fn ar1_ic_bound(phi1: f64) -> f64 {
    let a = phi1.abs();
    a / (1.0 + a * a - a)
}

/// Varah's bound `‖A⁻¹‖_∞ ≤ 1 / min_k (|a_kk| − Σ_{j≠k} |a_kj|)`.
pub fn varah_bound(a: &DenseMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("Varah bound needs a square matrix".into()));
    }
    let mut min_gap = f64::INFINITY;
    for k in 0..a.rows() {
        let off: f64 = a
            .row(k)
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, v)| v.abs())
            .sum();
        let gap = a[(k, k)].abs() - off;
        if !(gap > 0.0) {
            return Err(Error::NotDiagonallyDominant { row: k });
        }
        min_gap = min_gap.min(gap);
    }
    Ok(1.0 / min_gap)
}

/// Placement hypotheses of the AR(1) bound, with one-based `j`:
/// every `j ∈ J` has `p < j < pq − p`, and no `j` has both `j − p` and `j + p` in `J`.
pub fn ar1_placement_ok(truth: &SupportSpec, p: usize, q: usize) -> bool {
    let pq = p * q;
    let interior = truth.indices().iter().all(|&idx| {
        let j = idx + 1;
        j > p && j < pq.saturating_sub(p)
    });
    // both neighbours in J ⇔ two members of J are exactly 2p apart
    interior && !truth.indices().iter().any(|&idx| truth.contains(idx + 2 * p))
}

pub fn audit_assumptions(
    prob: &VectorizedProblem,
    truth: &SupportSpec,
    c1: f64,
    c2: f64,
) -> Result<AssumptionAudit> {
    let sum = c1 + c2;
    if !(c1 >= 0.0 && c2 >= 0.0 && sum > 0.0 && sum < 0.5) {
        return Err(Error::InvalidExponents { c1, c2 });
    }
    let shape = prob.shape();
    let (n, p, q) = (shape.n as f64, shape.p, shape.q);
    let dim = shape.n_coef();
    if truth.indices().last().is_some_and(|&j| j >= dim) {
        return Err(Error::DimensionMismatch(format!(
            "support exceeds {dim} coefficients"
        )));
    }

    let m1_bound = (0..dim).map(|j| prob.gram_entry(j, j)).fold(0.0, f64::max) / n;
    let m2_bound = if truth.is_empty() {
        0.0
    } else {
        let s_jj = sub_gram(prob, truth.indices(), truth.indices());
        (symmetric_eigenvalues(&s_jj)?[0] / n).max(0.0)
    };
    let qf = q as f64;
    let min_beta_scaled = truth.magnitudes().and_then(|m| {
        m.iter()
            .copied()
            .reduce(f64::min)
            .map(|v| qf.powf(c2) * v)
    });

    let xtx = prob.gram_right();
    let nu = xtx.trace() / p as f64;
    let defect = DenseMatrix::from_fn(p, p, |i, j| {
        xtx[(i, j)] - if i == j { nu } else { 0.0 }
    });
    let x_eigs = symmetric_eigenvalues(xtx)?;
    let prec_eigs = symmetric_eigenvalues(prob.gram_left())?;

    Ok(AssumptionAudit {
        m1_bound,
        m2_bound,
        c1,
        c2,
        min_beta_scaled,
        sparsity_ratio: truth.len() as f64 / qf.powf(c1),
        x_orth_defect: if nu > 0.0 { defect.inf_norm() / nu } else { f64::INFINITY },
        lambda_window: LambdaWindow {
            lower: n.sqrt() * n.ln().max(0.0),
            upper: n * qf.powf(-sum),
            heuristic: true,
        },
        x_col_norm_max: xtx.diagonal().into_iter().fold(0.0, f64::max) / n,
        x_min_eigenvalue: (x_eigs[0] / n).max(0.0),
        x_gram_inf_norm: xtx.inf_norm() / n,
        precision_max_eigenvalue: *prec_eigs.last().unwrap_or(&0.0),
        precision_min_eigenvalue: prec_eigs.first().copied().unwrap_or(0.0).max(0.0),
        ar1_placement_ok: ar1_placement_ok(truth, p, q),
    })
}
