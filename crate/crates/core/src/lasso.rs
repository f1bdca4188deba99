//! Cyclic coordinate descent for `‖𝒴 − 𝒳β‖² + λ‖β‖₁`.
//!
//! The loss is unscaled, so `λ_max = 2‖𝒳'𝒴‖_∞`. The solver works entirely
//! with `Σ⁻¹ ⊗ X'X`: updating coordinate `(r, k)` changes the correlation
//! vector only at coordinates `(r', k')` with `Σ⁻¹[k', k] ≠ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, cholesky_solve, DenseMatrix};
use crate::whitening::VectorizedProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoConfig {
    pub n_lambda: usize,
    pub lambda_min_ratio: f64,
    /// Sweep tolerance as a fraction of `λ_max / 2`, measured on the change of
    /// the KKT quantity `2(𝒳'(𝒴 − 𝒳β))_j` caused by each coordinate update.
    pub tol: f64,
    /// KKT certificate tolerance as a fraction of `λ_max`.
    pub kkt_tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            n_lambda: 100,
            lambda_min_ratio: 1e-3,
            tol: 1e-9,
            kkt_tol: 1e-6,
            max_sweeps: 100_000,
        }
    }
}

impl LassoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_lambda == 0 {
            return Err(Error::InvalidConfig("n_lambda must be at least 1".into()));
        }
        if !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda_min_ratio must lie in (0, 1), got {}",
                self.lambda_min_ratio
            )));
        }
        if !(self.tol > 0.0) || !(self.kkt_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidConfig("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }

    /// Log-spaced, strictly decreasing grid from `λ_max` to `λ_max · lambda_min_ratio`.
    pub fn grid(&self, lambda_max: f64) -> Vec<f64> {
        if self.n_lambda == 1 {
            return vec![lambda_max];
        }
        let step = self.lambda_min_ratio.ln() / (self.n_lambda - 1) as f64;
        (0..self.n_lambda)
            .map(|i| lambda_max * (step * i as f64).exp())
            .collect()
    }
}

/// One certified LASSO solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub beta: Vec<f64>,
    pub sweeps: usize,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    pub lambda_max: f64,
    pub lambdas: Vec<f64>,
    pub betas: Vec<Vec<f64>>,
    pub sweeps_used: Vec<usize>,
    pub kkt_residuals: Vec<f64>,
}

impl LassoPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// Support `J` (zero-based coordinates of `vec(B)`) with the sign of each entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSpec {
    indices: Vec<usize>,
    signs: Vec<i8>,
    /// `|ℬ_j|` on the support, when known.
    magnitudes: Option<Vec<f64>>,
}

impl SupportSpec {
    pub fn new(indices: Vec<usize>, signs: Vec<i8>, dim: usize) -> Result<Self> {
        if indices.len() != signs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} support indices but {} signs",
                indices.len(),
                signs.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("support indices must be strictly increasing".into()));
        }
        if let Some(&j) = indices.last().filter(|&&j| j >= dim) {
            return Err(Error::DimensionMismatch(format!(
                "support index {j} out of range for {dim} coefficients"
            )));
        }
        if signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::InvalidConfig("signs must be +1 or -1".into()));
        }
        Ok(Self {
            indices,
            signs,
            magnitudes: None,
        })
    }

    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
            signs: Vec::new(),
            magnitudes: None,
        }
    }

    /// Support, signs and magnitudes of a coefficient vector.
    pub fn from_coefficients(beta: &[f64]) -> Self {
        let mut indices = Vec::new();
        let mut signs = Vec::new();
        let mut magnitudes = Vec::new();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                indices.push(j);
                signs.push(if b > 0.0 { 1 } else { -1 });
                magnitudes.push(b.abs());
            }
        }
        Self {
            indices,
            signs,
            magnitudes: Some(magnitudes),
        }
    }

    pub fn with_magnitudes(mut self, magnitudes: Vec<f64>) -> Result<Self> {
        if magnitudes.len() != self.indices.len() {
            return Err(Error::DimensionMismatch("one magnitude per support index".into()));
        }
        self.magnitudes = Some(magnitudes);
        Ok(self)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn magnitudes(&self) -> Option<&[f64]> {
        self.magnitudes.as_deref()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    /// Sorted complement `J^c` within `0..dim`.
    pub fn complement(&self, dim: usize) -> Vec<usize> {
        (0..dim).filter(|j| !self.contains(*j)).collect()
    }

    /// Exact sign agreement: support and signs.
    pub fn matches(&self, beta: &[f64]) -> bool {
        let mut next = self.indices.iter().zip(&self.signs).peekable();
        for (j, &b) in beta.iter().enumerate() {
            let expected = match next.peek() {
                Some((&idx, &s)) if idx == j => {
                    next.next();
                    s
                }
                _ => 0,
            };
            let got = if b > 0.0 {
                1
            } else if b < 0.0 {
                -1
            } else {
                0
            };
            if got != expected {
                return false;
            }
        }
        next.next().is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovery {
    pub any_lambda: bool,
    /// Largest grid value with an exact sign match.
    pub best_lambda: Option<f64>,
}

pub fn sign_recovered(path: &LassoPath, truth: &SupportSpec) -> Recovery {
    let hit = path
        .lambdas
        .iter()
        .zip(&path.betas)
        .find(|(_, beta)| truth.matches(beta));
    Recovery {
        any_lambda: hit.is_some(),
        best_lambda: hit.map(|(l, _)| *l),
    }
}

/// Largest KKT violation of `beta` at `lambda`, using a fresh correlation.
pub fn kkt_residual(prob: &VectorizedProblem, beta: &[f64], lambda: f64) -> Result<f64> {
    let corr = prob.correlation(beta)?;
    Ok(kkt_violation(beta, &corr, lambda))
}

fn kkt_violation(beta: &[f64], corr: &[f64], lambda: f64) -> f64 {
    beta.iter()
        .zip(corr)
        .map(|(&b, &c)| {
            let g = 2.0 * c;
            if b > 0.0 {
                (g - lambda).abs()
            } else if b < 0.0 {
                (g + lambda).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

enum Polish {
    /// Optimal for the full problem, with this KKT residual.
    Optimal(f64),
    /// Optimal on its support; some inactive coordinate violates KKT.
    FaceOptimal,
    /// The sub-Gram on the support is singular.
    Unavailable,
}

struct CoordinateDescent<'a> {
    prob: &'a VectorizedProblem,
    p: usize,
    diag: Vec<f64>,
    /// Nonzero entries `(k', Σ⁻¹[k', k])` of each column `k` of `Σ⁻¹`.
    left_nz: Vec<Vec<(usize, f64)>>,
    beta: Vec<f64>,
    /// Running `𝒳'(𝒴 − 𝒳β)`.
    corr: Vec<f64>,
}

impl<'a> CoordinateDescent<'a> {
    fn new(prob: &'a VectorizedProblem, init: &[f64]) -> Result<Self> {
        let shape = prob.shape();
        let dim = shape.n_coef();
        if init.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "initial vector has length {} but pq = {dim}",
                init.len()
            )));
        }
        let left = prob.gram_left();
        let q = shape.q;
        let left_nz = (0..q)
            .map(|k| {
                (0..q)
                    .filter_map(|k2| {
                        let v = left[(k2, k)];
                        (v != 0.0).then_some((k2, v))
                    })
                    .collect()
            })
            .collect();
        let diag = (0..dim).map(|j| prob.gram_entry(j, j)).collect();
        Ok(Self {
            prob,
            p: shape.p,
            diag,
            left_nz,
            beta: init.to_vec(),
            corr: prob.correlation(init)?,
        })
    }

    fn refresh(&mut self) -> Result<()> {
        self.corr = self.prob.correlation(&self.beta)?;
        Ok(())
    }

    /// Minimizes over coordinate `j`; returns the induced change of `2·corr_j`.
    fn update(&mut self, j: usize, half_lambda: f64) -> f64 {
        let d = self.diag[j];
        if d <= 0.0 {
            return 0.0;
        }
        let z = self.corr[j] + d * self.beta[j];
        // strict inequality activates; exact ties stay at zero
        let new = if z > half_lambda {
            (z - half_lambda) / d
        } else if z < -half_lambda {
            (z + half_lambda) / d
        } else {
            0.0
        };
        let delta = new - self.beta[j];
        if delta == 0.0 {
            return 0.0;
        }
        self.beta[j] = new;
        let (r, k) = (j % self.p, j / self.p);
        let xtx_row = self.prob.gram_right().row(r);
        for &(k2, s) in &self.left_nz[k] {
            let f = s * delta;
            let block = &mut self.corr[k2 * self.p..(k2 + 1) * self.p];
            for (c, &g) in block.iter_mut().zip(xtx_row) {
                *c -= f * g;
            }
        }
        2.0 * d * delta.abs()
    }

    fn sweep(&mut self, coords: impl Iterator<Item = usize>, lambda: f64) -> f64 {
        let half_lambda = 0.5 * lambda;
        coords.fold(0.0, |m, j| m.max(self.update(j, half_lambda)))
    }

    fn objective(&self, lambda: f64) -> f64 {
        let l1: f64 = self.beta.iter().map(|b| b.abs()).sum();
        let bx: f64 = self.beta.iter().zip(self.prob.xty()).map(|(b, x)| b * x).sum();
        let bc: f64 = self.beta.iter().zip(&self.corr).map(|(b, c)| b * c).sum();
        self.prob.y_norm2() - bx - bc + lambda * l1
    }

    fn solve(&mut self, lambda: f64, tol: f64, kkt_tol: f64, max_sweeps: usize) -> Result<Solution> {
        let dim = self.beta.len();
        let mut sweeps = 0;
        let mut full_sweeps = 0;
        let mut last_obj = self.objective(lambda);
        loop {
            if sweeps >= max_sweeps {
                return Err(self.not_converged(lambda, sweeps));
            }
            let change = self.sweep(0..dim, lambda);
            sweeps += 1;
            full_sweeps += 1;
            self.check_descent(lambda, &mut last_obj);
            if change <= tol {
                self.refresh()?;
                let kkt = kkt_violation(&self.beta, &self.corr, lambda);
                if kkt <= kkt_tol {
                    return Ok(Solution {
                        beta: self.beta.clone(),
                        sweeps,
                        kkt_residual: kkt,
                    });
                }
                last_obj = self.objective(lambda);
                continue;
            }
            if full_sweeps >= 2 {
                match self.polish(lambda, kkt_tol)? {
                    Polish::Optimal(kkt) => {
                        return Ok(Solution {
                            beta: self.beta.clone(),
                            sweeps,
                            kkt_residual: kkt,
                        })
                    }
                    Polish::FaceOptimal => {
                        // a full sweep admits the coordinates violating KKT
                        self.check_descent(lambda, &mut last_obj);
                        continue;
                    }
                    Polish::Unavailable => {}
                }
                let active: Vec<usize> = (0..dim).filter(|&j| self.beta[j] != 0.0).collect();
                loop {
                    if sweeps >= max_sweeps {
                        return Err(self.not_converged(lambda, sweeps));
                    }
                    let change = self.sweep(active.iter().copied(), lambda);
                    sweeps += 1;
                    self.check_descent(lambda, &mut last_obj);
                    if change <= tol {
                        break;
                    }
                }
            }
        }
    }

    /// Active-set refinement on the face of the current signs.
    ///
    /// Moves towards the exact minimizer of the objective restricted to the
    /// current support and signs; when a coordinate would change sign it is
    /// stopped at zero and dropped, and the face is re-solved. Every step
    /// decreases the objective. Coordinate descent alone crawls on the
    /// ill-conditioned Grams that whitening produces.
    fn polish(&mut self, lambda: f64, kkt_tol: f64) -> Result<Polish> {
        let half_lambda = 0.5 * lambda;
        let mut active: Vec<usize> = (0..self.beta.len()).filter(|&j| self.beta[j] != 0.0).collect();
        while !active.is_empty() {
            let g = DenseMatrix::from_fn(active.len(), active.len(), |a, b| {
                self.prob.gram_entry(active[a], active[b])
            });
            let Ok(l) = cholesky_lower(&g) else {
                return Ok(Polish::Unavailable);
            };
            let rhs: Vec<f64> = active
                .iter()
                .map(|&j| self.prob.xty()[j] - half_lambda * self.beta[j].signum())
                .collect();
            let target = cholesky_solve(&l, &rhs)?;
            // largest step keeping every sign, and the coordinate that blocks it
            let mut step = 1.0;
            let mut blocking = None;
            for (a, (&j, &t)) in active.iter().zip(&target).enumerate() {
                let b = self.beta[j];
                if t == 0.0 || t.signum() != b.signum() {
                    let s = b / (b - t);
                    if s < step {
                        step = s;
                        blocking = Some(a);
                    }
                }
            }
            for (&j, &t) in active.iter().zip(&target) {
                self.beta[j] += step * (t - self.beta[j]);
            }
            match blocking {
                Some(a) => {
                    self.beta[active[a]] = 0.0;
                    active.retain(|&j| self.beta[j] != 0.0);
                }
                None => break,
            }
        }
        self.refresh()?;
        let kkt = kkt_violation(&self.beta, &self.corr, lambda);
        Ok(if kkt <= kkt_tol {
            Polish::Optimal(kkt)
        } else {
            Polish::FaceOptimal
        })
    }

    #[inline]
    fn check_descent(&self, lambda: f64, last_obj: &mut f64) {
        if cfg!(debug_assertions) {
            let obj = self.objective(lambda);
            let slack = 1e-9 * (self.prob.y_norm2() + last_obj.abs()) + 1e-12;
            debug_assert!(
                obj <= *last_obj + slack,
                "objective increased from {last_obj} to {obj} at lambda {lambda}"
            );
            *last_obj = obj;
        }
    }

    fn not_converged(&mut self, lambda: f64, sweeps: usize) -> Error {
        let kkt = kkt_residual(self.prob, &self.beta, lambda).unwrap_or(f64::NAN);
        Error::NotConverged {
            lambda,
            lambda_index: None,
            sweeps,
            kkt_residual: kkt,
            beta: self.beta.clone(),
        }
    }
}

/// Solves the LASSO at a single `lambda`, warm-started from `init`.
pub fn solve_lasso(
    prob: &VectorizedProblem,
    lambda: f64,
    init: &[f64],
    cfg: &LassoConfig,
) -> Result<Solution> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be non-negative, got {lambda}")));
    }
    cfg.validate()?;
    let lambda_max = prob.lambda_max();
    let dim = prob.shape().n_coef();
    if lambda_max == 0.0 {
        return Ok(Solution {
            beta: vec![0.0; dim],
            sweeps: 0,
            kkt_residual: 0.0,
        });
    }
    let mut cd = CoordinateDescent::new(prob, init)?;
    cd.solve(
        lambda,
        cfg.tol * lambda_max / 2.0,
        cfg.kkt_tol * lambda_max,
        cfg.max_sweeps,
    )
}

/// Warm-started path over the configured grid, from `λ_max` downwards.
pub fn solve_path(prob: &VectorizedProblem, cfg: &LassoConfig) -> Result<LassoPath> {
    cfg.validate()?;
    let lambda_max = prob.lambda_max();
    let dim = prob.shape().n_coef();
    if lambda_max == 0.0 {
        return Ok(LassoPath {
            lambda_max,
            lambdas: vec![0.0],
            betas: vec![vec![0.0; dim]],
            sweeps_used: vec![0],
            kkt_residuals: vec![0.0],
        });
    }
    let lambdas = cfg.grid(lambda_max);
    let mut cd = CoordinateDescent::new(prob, &vec![0.0; dim])?;
    let mut path = LassoPath {
        lambda_max,
        lambdas: Vec::with_capacity(lambdas.len()),
        betas: Vec::with_capacity(lambdas.len()),
        sweeps_used: Vec::with_capacity(lambdas.len()),
        kkt_residuals: Vec::with_capacity(lambdas.len()),
    };
    for (idx, &lambda) in lambdas.iter().enumerate() {
        let sol = cd
            .solve(lambda, cfg.tol * lambda_max / 2.0, cfg.kkt_tol * lambda_max, cfg.max_sweeps)
            .map_err(|e| match e {
                Error::NotConverged {
                    lambda,
                    sweeps,
                    kkt_residual,
                    beta,
                    ..
                } => Error::NotConverged {
                    lambda,
                    lambda_index: Some(idx),
                    sweeps,
                    kkt_residual,
                    beta,
                },
                other => other,
            })?;
        path.lambdas.push(lambda);
        path.betas.push(sol.beta);
        path.sweeps_used.push(sol.sweeps);
        path.kkt_residuals.push(sol.kkt_residual);
    }
    Ok(path)
}
