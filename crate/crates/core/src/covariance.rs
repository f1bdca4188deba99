//! Response-covariance models: AR(1), AR(m) and explicit Toeplitz.
//!
//! Covers residual extraction, the pooled lag-one estimator of the AR(1)
//! coefficient, row-averaged Yule–Walker fits for AR(m), and construction of
//! the precision matrix together with its lower Cholesky square root.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_lower, project_out, solve_dense, spd_inverse, DenseMatrix, SymmetricToeplitz,
};

/// Estimates of the AR(1) coefficient are clamped to `[-1 + δ, 1 - δ]`.
pub const PHI_CLAMP: f64 = 1e-6;
/// Averaged AR(m) fits are shrunk until all roots lie outside this radius.
pub const STATIONARITY_RADIUS: f64 = 1.001;
const SHRINK_RESOLUTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceKind {
    Ar1 { phi1: f64, sigma2: f64 },
    Arm { coefficients: Vec<f64>, sigma2: f64 },
    ExplicitToeplitz { first_row: Vec<f64> },
}

/// A stationary covariance model for the `q` responses of one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct CovarianceModel {
    #[serde(flatten)]
    kind: CovarianceKind,
    dim: usize,
}

#[derive(Deserialize)]
struct RawModel {
    #[serde(flatten)]
    kind: CovarianceKind,
    dim: usize,
}

impl TryFrom<RawModel> for CovarianceModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        match raw.kind {
            CovarianceKind::Ar1 { phi1, sigma2 } => Self::ar1(phi1, sigma2, raw.dim),
            CovarianceKind::Arm {
                coefficients,
                sigma2,
            } => Self::arm(coefficients, sigma2, raw.dim),
            CovarianceKind::ExplicitToeplitz { first_row } => {
                if first_row.len() != raw.dim {
                    return Err(Error::InvalidModel(format!(
                        "first row has {} entries but dim is {}",
                        first_row.len(),
                        raw.dim
                    )));
                }
                Self::explicit(first_row)
            }
        }
    }
}

impl CovarianceModel {
    pub fn ar1(phi1: f64, sigma2: f64, dim: usize) -> Result<Self> {
        if !(phi1.abs() < 1.0) {
            return Err(Error::InvalidModel(format!("AR(1) needs |phi1| < 1, got {phi1}")));
        }
        check_variance(sigma2)?;
        check_dim(dim)?;
        Ok(Self {
            kind: CovarianceKind::Ar1 { phi1, sigma2 },
            dim,
        })
    }

    pub fn arm(coefficients: Vec<f64>, sigma2: f64, dim: usize) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidModel("AR(m) needs m >= 1".into()));
        }
        if !is_stationary(&coefficients, 1.0) {
            return Err(Error::InvalidModel(format!(
                "AR coefficients {coefficients:?} are not stationary"
            )));
        }
        check_variance(sigma2)?;
        check_dim(dim)?;
        Ok(Self {
            kind: CovarianceKind::Arm {
                coefficients,
                sigma2,
            },
            dim,
        })
    }

    pub fn explicit(first_row: Vec<f64>) -> Result<Self> {
        let dim = first_row.len();
        SymmetricToeplitz::new(first_row.clone())?;
        Ok(Self {
            kind: CovarianceKind::ExplicitToeplitz { first_row },
            dim,
        })
    }

    /// Independent unit-variance responses.
    pub fn identity(dim: usize) -> Result<Self> {
        Self::ar1(0.0, 1.0, dim)
    }

    pub fn kind(&self) -> &CovarianceKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Innovation variance, when the model has one.
    pub fn innovation_variance(&self) -> Option<f64> {
        match &self.kind {
            CovarianceKind::Ar1 { sigma2, .. } | CovarianceKind::Arm { sigma2, .. } => Some(*sigma2),
            CovarianceKind::ExplicitToeplitz { .. } => None,
        }
    }

    /// AR coefficients `(φ₁, …, φ_m)`; empty for explicit Toeplitz models.
    pub fn ar_coefficients(&self) -> Vec<f64> {
        match &self.kind {
            CovarianceKind::Ar1 { phi1, .. } => vec![*phi1],
            CovarianceKind::Arm { coefficients, .. } => coefficients.clone(),
            CovarianceKind::ExplicitToeplitz { .. } => Vec::new(),
        }
    }

    /// Same correlation structure with the innovation variance set to one.
    pub fn with_unit_innovation(&self) -> Self {
        let kind = match &self.kind {
            CovarianceKind::Ar1 { phi1, .. } => CovarianceKind::Ar1 {
                phi1: *phi1,
                sigma2: 1.0,
            },
            CovarianceKind::Arm { coefficients, .. } => CovarianceKind::Arm {
                coefficients: coefficients.clone(),
                sigma2: 1.0,
            },
            CovarianceKind::ExplicitToeplitz { first_row } => CovarianceKind::ExplicitToeplitz {
                first_row: first_row.iter().map(|v| v / first_row[0]).collect(),
            },
        };
        Self {
            kind,
            dim: self.dim,
        }
    }

    /// Same model for a different number of responses.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        match &self.kind {
            CovarianceKind::Ar1 { phi1, sigma2 } => Self::ar1(*phi1, *sigma2, dim),
            CovarianceKind::Arm {
                coefficients,
                sigma2,
            } => Self::arm(coefficients.clone(), *sigma2, dim),
            CovarianceKind::ExplicitToeplitz { .. } if dim == self.dim => Ok(self.clone()),
            CovarianceKind::ExplicitToeplitz { .. } => Err(Error::InvalidModel(
                "explicit Toeplitz models have a fixed dimension".into(),
            )),
        }
    }

    /// Short human-readable label, e.g. `ar1(0.95)`.
    pub fn label(&self) -> String {
        match &self.kind {
            CovarianceKind::Ar1 { phi1, .. } => format!("ar1({phi1})"),
            CovarianceKind::Arm { coefficients, .. } => {
                let c: Vec<String> = coefficients.iter().map(|v| v.to_string()).collect();
                format!("ar{}({})", coefficients.len(), c.join(";"))
            }
            CovarianceKind::ExplicitToeplitz { .. } => format!("toeplitz(q={})", self.dim),
        }
    }
}

fn check_variance(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("innovation variance must be positive, got {sigma2}")))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidModel("dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `Σ⁻¹` and its square root `half` with `half · half' = Σ⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionFactor {
    sigma_inv: DenseMatrix,
    half: DenseMatrix,
}

impl PrecisionFactor {
    /// Factor of an arbitrary symmetric positive-definite precision matrix.
    pub fn from_precision(sigma_inv: DenseMatrix) -> Result<Self> {
        let half = cholesky_lower(&sigma_inv)?;
        Ok(Self { sigma_inv, half })
    }

    /// No whitening: `Σ⁻¹ = half = I_q`.
    pub fn identity(dim: usize) -> Self {
        Self {
            sigma_inv: DenseMatrix::identity(dim),
            half: DenseMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.half.rows()
    }

    pub fn sigma_inv(&self) -> &DenseMatrix {
        &self.sigma_inv
    }

    pub fn half(&self) -> &DenseMatrix {
        &self.half
    }
}

/// Residuals `Ê = Π Y` of the column-wise least-squares fits.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualEstimate {
    pub e_hat: DenseMatrix,
    /// Trace of the projector, `n − p`.
    pub projector_trace: f64,
}

impl ResidualEstimate {
    /// Wraps residuals obtained elsewhere (e.g. a known noise matrix).
    pub fn from_residuals(e_hat: DenseMatrix, projector_trace: f64) -> Self {
        Self {
            e_hat,
            projector_trace,
        }
    }
}

pub fn extract_residuals(y: &DenseMatrix, x: &DenseMatrix) -> Result<ResidualEstimate> {
    let (n, p) = (x.rows(), x.cols());
    if p >= n {
        return Err(Error::DimensionMismatch(format!(
            "residual estimation needs p < n (p = {p}, n = {n})"
        )));
    }
    Ok(ResidualEstimate {
        e_hat: project_out(x, y)?,
        projector_trace: (n - p) as f64,
    })
}

/// Pooled lag-one ratio over all rows, clamped into the open unit interval.
pub fn estimate_phi1(res: &ResidualEstimate) -> Result<f64> {
    let e = &res.e_hat;
    let (n, q) = (e.rows(), e.cols());
    if q < 2 {
        return Err(Error::DimensionMismatch("AR(1) estimation needs q >= 2".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let row = e.row(i);
        for l in 1..q {
            num += row[l] * row[l - 1];
            den += row[l - 1] * row[l - 1];
        }
    }
    if !(den >= 1e-14 * (n * q) as f64) {
        return Err(Error::DegenerateResiduals(format!(
            "lag-one denominator {den} is numerically zero"
        )));
    }
    Ok((num / den).clamp(-1.0 + PHI_CLAMP, 1.0 - PHI_CLAMP))
}

/// AR(1) model with the pooled estimator and a moment estimate of σ².
pub fn estimate_ar1(res: &ResidualEstimate) -> Result<CovarianceModel> {
    let phi1 = estimate_phi1(res)?;
    let e = &res.e_hat;
    let ss: f64 = e.as_slice().iter().map(|v| v * v).sum();
    let gamma0 = ss / (res.projector_trace * e.cols() as f64);
    CovarianceModel::ar1(phi1, (gamma0 * (1.0 - phi1 * phi1)).max(f64::MIN_POSITIVE), e.cols())
}

/// Levinson–Durbin solution of the Yule–Walker equations.
///
/// `acov` holds `γ(0), …, γ(m)`; returns `(φ₁, …, φ_m)` and the innovation
/// variance.
pub fn yule_walker(acov: &[f64], m: usize) -> Result<(Vec<f64>, f64)> {
    if m == 0 || acov.len() <= m {
        return Err(Error::DimensionMismatch(format!(
            "order {m} needs {} autocovariances, got {}",
            m + 1,
            acov.len()
        )));
    }
    if !(acov[0] > 0.0) {
        return Err(Error::DegenerateResiduals("zero lag-0 autocovariance".into()));
    }
    let mut phi = vec![0.0; m];
    let mut prev = vec![0.0; m];
    let mut v = acov[0];
    for k in 1..=m {
        let acc: f64 = (1..k).map(|j| prev[j - 1] * acov[k - j]).sum();
        let kappa = (acov[k] - acc) / v;
        phi[k - 1] = kappa;
        for j in 1..k {
            phi[j - 1] = prev[j - 1] - kappa * prev[k - j - 1];
        }
        v *= 1.0 - kappa * kappa;
        prev[..k].copy_from_slice(&phi[..k]);
    }
    Ok((phi, v))
}

/// Row-averaged Yule–Walker AR(m) fit, projected back to stationarity.
pub fn estimate_arm(res: &ResidualEstimate, m: usize) -> Result<CovarianceModel> {
    let e = &res.e_hat;
    let (n, q) = (e.rows(), e.cols());
    if m == 0 || q <= 2 * m {
        return Err(Error::DimensionMismatch(format!(
            "AR({m}) estimation needs m >= 1 and q > 2m (q = {q})"
        )));
    }
    let total: f64 = e.as_slice().iter().map(|v| v * v).sum();
    if !(total >= 1e-14 * (n * q) as f64) {
        return Err(Error::DegenerateResiduals(format!(
            "residual sum of squares {total} is numerically zero"
        )));
    }
    let mut coef_sum = vec![0.0; m];
    let mut var_sum = 0.0;
    let mut used = 0usize;
    for i in 0..n {
        let row = e.row(i);
        let acov: Vec<f64> = (0..=m)
            .map(|h| (0..q - h).map(|t| row[t] * row[t + h]).sum::<f64>() / q as f64)
            .collect();
        if acov[0] <= 0.0 {
            continue;
        }
        let (phi, v) = yule_walker(&acov, m)?;
        coef_sum.iter_mut().zip(&phi).for_each(|(s, c)| *s += c);
        var_sum += v;
        used += 1;
    }
    if used == 0 {
        return Err(Error::DegenerateResiduals("every residual row is zero".into()));
    }
    let avg: Vec<f64> = coef_sum.iter().map(|s| s / used as f64).collect();
    let coefficients = project_stationary(&avg)?;
    let sigma2 = var_sum / used as f64 * n as f64 / res.projector_trace;
    CovarianceModel::arm(coefficients, sigma2.max(f64::MIN_POSITIVE), q)
}

/// Shrinks AR coefficients by the largest factor `t ∈ [0, 1]` (to 1e-6) that
/// puts every root of `1 − φ₁z − … − φ_m z^m` outside `STATIONARITY_RADIUS`.
pub fn project_stationary(coefficients: &[f64]) -> Result<Vec<f64>> {
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonStationaryFit);
    }
    if is_stationary(coefficients, STATIONARITY_RADIUS) {
        return Ok(coefficients.to_vec());
    }
    let scaled = |t: f64| coefficients.iter().map(|c| c * t).collect::<Vec<_>>();
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > SHRINK_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if is_stationary(&scaled(mid), STATIONARITY_RADIUS) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let out = scaled(lo);
    if is_stationary(&out, STATIONARITY_RADIUS) {
        Ok(out)
    } else {
        Err(Error::NonStationaryFit)
    }
}

/// True when every root of `1 − Σ φ_i z^i` has modulus greater than `radius`.
///
/// Uses the step-down (Schur–Cohn) recursion on `φ_i radius^i`: the polynomial
/// is stable iff all reflection coefficients lie strictly inside (−1, 1).
pub fn is_stationary(coefficients: &[f64], radius: f64) -> bool {
    let mut a: Vec<f64> = coefficients
        .iter()
        .enumerate()
        .map(|(i, c)| c * radius.powi(i as i32 + 1))
        .collect();
    while let Some(&kappa) = a.last() {
        if !(kappa.abs() < 1.0) {
            return false;
        }
        let k = a.len();
        let denom = 1.0 - kappa * kappa;
        let next: Vec<f64> = (0..k - 1).map(|j| (a[j] + kappa * a[k - 2 - j]) / denom).collect();
        a = next;
    }
    true
}

/// Autocovariances `γ(0), …, γ(len−1)` of a causal AR process.
pub fn ar_autocovariances(coefficients: &[f64], sigma2: f64, len: usize) -> Result<Vec<f64>> {
    let m = coefficients.len();
    // γ(h) − Σ_i φ_i γ(|h − i|) = σ² δ_{h0}, for h = 0..=m
    let mut a = DenseMatrix::identity(m + 1);
    for h in 0..=m {
        for (i, &phi) in coefficients.iter().enumerate() {
            a[(h, h.abs_diff(i + 1))] -= phi;
        }
    }
    let mut rhs = vec![0.0; m + 1];
    rhs[0] = sigma2;
    let mut gamma = solve_dense(&a, &rhs)?;
    for h in m + 1..len {
        let g = coefficients
            .iter()
            .enumerate()
            .map(|(i, phi)| phi * gamma[h - i - 1])
            .sum();
        gamma.push(g);
    }
    gamma.truncate(len);
    Ok(gamma)
}

/// The `q × q` covariance as a symmetric Toeplitz matrix.
pub fn materialize_sigma(model: &CovarianceModel) -> Result<SymmetricToeplitz> {
    let q = model.dim;
    let first_row = match &model.kind {
        CovarianceKind::Ar1 { phi1, sigma2 } => {
            let var = sigma2 / (1.0 - phi1 * phi1);
            let mut row = Vec::with_capacity(q);
            let mut pow = 1.0;
            for _ in 0..q {
                row.push(var * pow);
                pow *= phi1;
            }
            row
        }
        CovarianceKind::Arm {
            coefficients,
            sigma2,
        } => ar_autocovariances(coefficients, *sigma2, q)?,
        CovarianceKind::ExplicitToeplitz { first_row } => first_row.clone(),
    };
    SymmetricToeplitz::new(first_row)
}

pub fn build_precision(model: &CovarianceModel) -> Result<PrecisionFactor> {
    match &model.kind {
        CovarianceKind::Ar1 { phi1, sigma2 } => {
            let q = model.dim;
            let phi = *phi1;
            let sigma_inv = DenseMatrix::from_fn(q, q, |i, j| {
                let v = match i.abs_diff(j) {
                    0 if q == 1 => 1.0 - phi * phi,
                    0 if i == 0 || i == q - 1 => 1.0,
                    0 => 1.0 + phi * phi,
                    1 => -phi,
                    _ => 0.0,
                };
                v / sigma2
            });
            PrecisionFactor::from_precision(sigma_inv)
        }
        _ => {
            let sigma = materialize_sigma(model)?.materialize();
            PrecisionFactor::from_precision(spd_inverse(&sigma)?)
        }
    }
}
