//! Monte Carlo sign-recovery experiments.
//!
//! Each replicate owns a ChaCha stream derived from `(seed, cell, replicate)`,
//! so reports do not depend on how replicates are scheduled across threads.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{
    build_precision, estimate_ar1, estimate_arm, extract_residuals, materialize_sigma,
    CovarianceKind, CovarianceModel, PrecisionFactor,
};
use crate::error::{Error, Result};
use crate::lasso::{sign_recovered, solve_path, LassoConfig, SupportSpec};
use crate::linalg::{cholesky_lower, DenseMatrix};
use crate::whitening::{build_problem, ProblemShape};

pub const DEFAULT_REGRESSION_P: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSpec {
    /// Two equal groups, cell-means coding.
    BalancedAnova2,
    /// Two groups of sizes `⌈rn⌉` and `n − ⌈rn⌉`.
    UnbalancedAnova2 { r: f64 },
    /// Gaussian rows with unit variances and common correlation `rho`.
    CorrelatedRegression {
        #[serde(default = "default_regression_p")]
        p: usize,
        rho: f64,
    },
}

fn default_regression_p() -> usize {
    DEFAULT_REGRESSION_P
}

impl DesignSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DesignSpec::BalancedAnova2 => Ok(()),
            DesignSpec::UnbalancedAnova2 { r } if r > 0.0 && r < 1.0 => Ok(()),
            DesignSpec::UnbalancedAnova2 { r } => {
                Err(Error::InvalidConfig(format!("group fraction r must lie in (0, 1), got {r}")))
            }
            DesignSpec::CorrelatedRegression { p, rho } if p >= 1 && (0.0..1.0).contains(&rho) => Ok(()),
            DesignSpec::CorrelatedRegression { p, rho } => Err(Error::InvalidConfig(format!(
                "regression design needs p >= 1 and rho in [0, 1), got p={p}, rho={rho}"
            ))),
        }
    }

    pub fn p(&self) -> usize {
        match self {
            DesignSpec::BalancedAnova2 | DesignSpec::UnbalancedAnova2 { .. } => 2,
            DesignSpec::CorrelatedRegression { p, .. } => *p,
        }
    }

    /// Whether the design is random (redrawn per replicate).
    pub fn is_random(&self) -> bool {
        matches!(self, DesignSpec::CorrelatedRegression { .. })
    }

    pub fn label(&self) -> String {
        match self {
            DesignSpec::BalancedAnova2 => "balanced".into(),
            DesignSpec::UnbalancedAnova2 { r } => format!("unbalanced(r={r})"),
            DesignSpec::CorrelatedRegression { p, rho } => format!("regression(p={p};rho={rho})"),
        }
    }
}

fn indicator_design(n: usize, first_group: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, 2, |i, j| {
        if (i < first_group) == (j == 0) {
            1.0
        } else {
            0.0
        }
    })
}

pub fn gen_design<R: Rng + ?Sized>(spec: &DesignSpec, n: usize, rng: &mut R) -> Result<DenseMatrix> {
    spec.validate()?;
    let incompatible = || Error::IncompatibleSize {
        n,
        spec: spec.label(),
    };
    match *spec {
        DesignSpec::BalancedAnova2 => {
            if n == 0 || !n.is_multiple_of(2) {
                return Err(incompatible());
            }
            Ok(indicator_design(n, n / 2))
        }
        DesignSpec::UnbalancedAnova2 { r } => {
            let n1 = (r * n as f64).ceil() as usize;
            if n1 == 0 || n1 >= n {
                return Err(incompatible());
            }
            Ok(indicator_design(n, n1))
        }
        DesignSpec::CorrelatedRegression { p, rho } => {
            if n == 0 {
                return Err(incompatible());
            }
            let (shared, own) = (rho.sqrt(), (1.0 - rho).sqrt());
            let mut x = DenseMatrix::zeros(n, p);
            for i in 0..n {
                let z0: f64 = rng.sample(StandardNormal);
                for v in x.row_mut(i) {
                    let z: f64 = rng.sample(StandardNormal);
                    *v = shared * z0 + own * z;
                }
            }
            Ok(x)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Interior indices with no two support members `2p` apart.
    Prop4Compatible,
    UniformRandom,
}

/// Sparsity and magnitude of the simulated coefficients at one `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub c1: f64,
    pub c2: f64,
    /// `|J|`, by default `⌊q^{c1}⌋`.
    pub support_size: usize,
    /// `|ℬ_j|` on the support, by default `M3 · q^{−c2}`.
    pub min_magnitude: f64,
    pub placement: Placement,
}

impl SignalSpec {
    /// `c1 = c2` with `c1 + c2 = 1/(2k)`, at `q` response columns.
    pub fn from_k(k: f64, m3: f64, q: usize, placement: Placement) -> Result<Self> {
        if !(k > 0.0) || !(m3 > 0.0) || q == 0 {
            return Err(Error::InvalidConfig(format!(
                "need k > 0, M3 > 0 and q > 0 (k={k}, M3={m3}, q={q})"
            )));
        }
        let c = 1.0 / (4.0 * k);
        let qf = q as f64;
        Ok(Self {
            c1: c,
            c2: c,
            // guard against q^{c1} landing a hair below an integer
            support_size: (qf.powf(c) + 1e-9).floor() as usize,
            min_magnitude: m3 * qf.powf(-c),
            placement,
        })
    }

    /// `k` with `c1 + c2 = 1/(2k)`.
    pub fn k(&self) -> f64 {
        1.0 / (2.0 * (self.c1 + self.c2))
    }
}

fn place_support<R: Rng + ?Sized>(
    placement: Placement,
    size: usize,
    shape: ProblemShape,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let (p, dim) = (shape.p, shape.n_coef());
    if size > dim {
        return Err(Error::PlacementInfeasible {
            requested: size,
            available: dim,
        });
    }
    match placement {
        Placement::UniformRandom => {
            let mut idx = rand::seq::index::sample(rng, dim, size).into_vec();
            idx.sort_unstable();
            Ok(idx)
        }
        Placement::Prop4Compatible => {
            // one-based p < j < pq − p  ⇔  zero-based p ≤ idx < pq − p − 1
            let upper = dim.saturating_sub(p + 1);
            let mut candidates: Vec<usize> = (p..upper).collect();
            if size > candidates.len() {
                return Err(Error::PlacementInfeasible {
                    requested: size,
                    available: candidates.len(),
                });
            }
            for _ in 0..64 {
                candidates.shuffle(rng);
                let mut chosen: Vec<usize> = Vec::with_capacity(size);
                for &c in &candidates {
                    if chosen.len() == size {
                        break;
                    }
                    if !chosen.iter().any(|&o| o.abs_diff(c) == 2 * p) {
                        chosen.push(c);
                    }
                }
                if chosen.len() == size {
                    chosen.sort_unstable();
                    return Ok(chosen);
                }
            }
            Err(Error::PlacementInfeasible {
                requested: size,
                available: candidates.len(),
            })
        }
    }
}

/// Sparse `vec(B)` with `|ℬ_j| = M3 q^{−c2}` on the support and uniform signs.
pub fn gen_signal<R: Rng + ?Sized>(
    spec: &SignalSpec,
    shape: ProblemShape,
    rng: &mut R,
) -> Result<(Vec<f64>, SupportSpec)> {
    let (size, magnitude) = (spec.support_size, spec.min_magnitude);
    if !(magnitude > 0.0 && magnitude.is_finite()) {
        return Err(Error::InvalidConfig("minimal magnitude must be positive".into()));
    }
    let indices = place_support(spec.placement, size, shape, rng)?;
    let signs: Vec<i8> = indices
        .iter()
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect();
    let mut beta = vec![0.0; shape.n_coef()];
    for (&j, &s) in indices.iter().zip(&signs) {
        beta[j] = f64::from(s) * magnitude;
    }
    let truth = SupportSpec::new(indices, signs, shape.n_coef())?.with_magnitudes(vec![magnitude; size])?;
    Ok((beta, truth))
}

/// `n` independent rows, each a stationary path of the model.
pub fn gen_noise<R: Rng + ?Sized>(model: &CovarianceModel, n: usize, rng: &mut R) -> Result<DenseMatrix> {
    let q = model.dim();
    let acov = materialize_sigma(model)?;
    let (coefficients, sigma) = match model.kind() {
        CovarianceKind::Ar1 { phi1, sigma2 } => (vec![*phi1], sigma2.sqrt()),
        CovarianceKind::Arm {
            coefficients,
            sigma2,
        } => (coefficients.clone(), sigma2.sqrt()),
        // no recursion: the whole row comes from the Cholesky factor
        CovarianceKind::ExplicitToeplitz { .. } => (Vec::new(), 0.0),
    };
    let m = coefficients.len();
    let start = if m == 0 { q } else { m.min(q) };
    let init_cov = DenseMatrix::from_fn(start, start, |i, j| acov.first_row()[i.abs_diff(j)]);
    let init_chol = cholesky_lower(&init_cov)?;

    let mut e = DenseMatrix::zeros(n, q);
    let mut z = vec![0.0; start];
    for i in 0..n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let row = e.row_mut(i);
        for t in 0..start {
            row[t] = crate::linalg::dot(&init_chol.row(t)[..=t], &z[..=t]);
        }
        for t in start..q {
            let mut v = sigma * rng.sample::<f64, _>(StandardNormal);
            for (l, phi) in coefficients.iter().enumerate() {
                v += phi * row[t - l - 1];
            }
            row[t] = v;
        }
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Whitening with the true covariance.
    Oracle,
    /// Whitening with the covariance estimated from residuals.
    Whitened,
    /// No whitening.
    Raw,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Oracle, Estimator::Whitened, Estimator::Raw];

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Oracle => "oracle",
            Estimator::Whitened => "whitened",
            Estimator::Raw => "raw",
        }
    }
}

/// AR noise family of an experiment; instantiated at each `q` of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Ar1 {
        phi1: f64,
        #[serde(default = "unit")]
        sigma2: f64,
    },
    Arm {
        coefficients: Vec<f64>,
        #[serde(default = "unit")]
        sigma2: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl NoiseSpec {
    pub fn model(&self, q: usize) -> Result<CovarianceModel> {
        match self {
            NoiseSpec::Ar1 { phi1, sigma2 } => CovarianceModel::ar1(*phi1, *sigma2, q),
            NoiseSpec::Arm {
                coefficients,
                sigma2,
            } => CovarianceModel::arm(coefficients.clone(), *sigma2, q),
        }
    }

    pub fn label(&self) -> String {
        match self {
            NoiseSpec::Ar1 { phi1, .. } => format!("ar1({phi1})"),
            NoiseSpec::Arm { coefficients, .. } => {
                let c: Vec<String> = coefficients.iter().map(|v| v.to_string()).collect();
                format!("ar{}({})", coefficients.len(), c.join(";"))
            }
        }
    }
}

fn default_replicates() -> usize {
    1000
}

fn default_estimators() -> Vec<Estimator> {
    Estimator::ALL.to_vec()
}

fn default_k() -> Vec<f64> {
    vec![2.0]
}

fn default_placement() -> Placement {
    Placement::Prop4Compatible
}

fn default_designs() -> Vec<DesignSpec> {
    vec![DesignSpec::BalancedAnova2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub n_values: Vec<usize>,
    pub q_values: Vec<usize>,
    #[serde(default = "default_k")]
    pub k_values: Vec<f64>,
    #[serde(default = "default_designs")]
    pub designs: Vec<DesignSpec>,
    pub noises: Vec<NoiseSpec>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Estimator>,
    #[serde(default = "unit")]
    pub m3: f64,
    #[serde(default = "default_placement")]
    pub placement: Placement,
    #[serde(default)]
    pub lasso: LassoConfig,
}

/// One point of the experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: usize,
    pub design: DesignSpec,
    pub noise: NoiseSpec,
    pub n: usize,
    pub q: usize,
    pub k: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str| Error::InvalidConfig(format!("{name} must not be empty"));
        if self.n_values.is_empty() {
            return Err(empty("n_values"));
        }
        if self.q_values.is_empty() {
            return Err(empty("q_values"));
        }
        if self.k_values.is_empty() {
            return Err(empty("k_values"));
        }
        if self.designs.is_empty() {
            return Err(empty("designs"));
        }
        if self.noises.is_empty() {
            return Err(empty("noises"));
        }
        if self.estimators.is_empty() {
            return Err(empty("estimators"));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        self.lasso.validate()?;
        for d in &self.designs {
            d.validate()?;
        }
        for cell in self.cells() {
            cell.noise.model(cell.q)?;
            let signal = SignalSpec::from_k(cell.k, self.m3, cell.q, self.placement)?;
            let shape = ProblemShape::new(cell.n, cell.design.p(), cell.q)?;
            if shape.p >= shape.n && self.estimators.contains(&Estimator::Whitened) {
                return Err(Error::InvalidConfig(format!(
                    "residual estimation needs p < n (cell {})",
                    cell.id
                )));
            }
            if let (NoiseSpec::Arm { coefficients, .. }, true) =
                (&cell.noise, self.estimators.contains(&Estimator::Whitened))
            {
                if cell.q <= 2 * coefficients.len() {
                    return Err(Error::InvalidConfig(format!(
                        "AR({}) estimation needs q > {} (cell {})",
                        coefficients.len(),
                        2 * coefficients.len(),
                        cell.id
                    )));
                }
            }
            if !cell.design.is_random() {
                gen_design(&cell.design, cell.n, &mut ChaCha8Rng::seed_from_u64(0))?;
            }
            // deterministic feasibility probe for the support placement
            place_support(
                self.placement,
                signal.support_size,
                shape,
                &mut ChaCha8Rng::seed_from_u64(0),
            )?;
        }
        Ok(())
    }

    /// Grid cells, ordered by design, noise, n, q, k.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for design in &self.designs {
            for noise in &self.noises {
                for &n in &self.n_values {
                    for &q in &self.q_values {
                        for &k in &self.k_values {
                            out.push(Cell {
                                id: out.len(),
                                design: design.clone(),
                                noise: noise.clone(),
                                n,
                                q,
                                k,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicateStatus {
    Ok,
    NotConverged,
    EstimationFailed,
    Failed,
}

impl ReplicateStatus {
    pub fn name(&self) -> &'static str {
        match self {
            ReplicateStatus::Ok => "ok",
            ReplicateStatus::NotConverged => "not_converged",
            ReplicateStatus::EstimationFailed => "estimation_failed",
            ReplicateStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub cell: usize,
    pub design: String,
    pub noise: String,
    pub n: usize,
    pub q: usize,
    pub k: f64,
    pub estimator: Estimator,
    pub replicate: usize,
    pub recovered: bool,
    pub best_lambda: Option<f64>,
    pub phi1_hat: Option<f64>,
    pub status: ReplicateStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFrequency {
    pub cell: usize,
    pub design: String,
    pub noise: String,
    pub n: usize,
    pub q: usize,
    pub k: f64,
    pub estimator: Estimator,
    pub replicates: usize,
    pub recovered: usize,
    pub frequency: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub records: Vec<ReplicateRecord>,
    pub frequencies: Vec<CellFrequency>,
    /// False when the run was interrupted before every replicate finished.
    pub complete: bool,
}

impl RecoveryReport {
    pub fn frequency(&self, cell: usize, estimator: Estimator) -> Option<f64> {
        self.frequencies
            .iter()
            .find(|f| f.cell == cell && f.estimator == estimator)
            .map(|f| f.frequency)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one replicate of one cell.
pub fn replicate_rng(seed: u64, cell: usize, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(cell as u64)));
    rng.set_stream(replicate as u64);
    rng
}

/// Data of one replicate: design, coefficients, truth and response.
pub struct ReplicateData {
    pub x: DenseMatrix,
    pub beta: Vec<f64>,
    pub truth: SupportSpec,
    pub y: DenseMatrix,
    pub model: CovarianceModel,
}

pub fn draw_replicate(cfg: &ExperimentConfig, cell: &Cell, replicate: usize) -> Result<ReplicateData> {
    let mut rng = replicate_rng(cfg.seed, cell.id, replicate);
    let model = cell.noise.model(cell.q)?;
    let x = gen_design(&cell.design, cell.n, &mut rng)?;
    let shape = ProblemShape::new(cell.n, x.cols(), cell.q)?;
    let signal = SignalSpec::from_k(cell.k, cfg.m3, cell.q, cfg.placement)?;
    let (beta, truth) = gen_signal(&signal, shape, &mut rng)?;
    let e = gen_noise(&model, cell.n, &mut rng)?;
    let b = DenseMatrix::from_col_major(shape.p, shape.q, &beta)?;
    let y = x.matmul(&b)?.add(&e)?;
    Ok(ReplicateData {
        x,
        beta,
        truth,
        y,
        model,
    })
}

/// Whitening factor used by `estimator`, with the AR(1) coefficient estimate if any.
pub fn estimator_factor(
    estimator: Estimator,
    data: &ReplicateData,
) -> Result<(PrecisionFactor, Option<f64>)> {
    match estimator {
        Estimator::Oracle => Ok((build_precision(&data.model)?, None)),
        Estimator::Raw => Ok((PrecisionFactor::identity(data.model.dim()), None)),
        Estimator::Whitened => {
            let res = extract_residuals(&data.y, &data.x)?;
            let fitted = match data.model.kind() {
                CovarianceKind::Ar1 { .. } => estimate_ar1(&res)?,
                CovarianceKind::Arm { coefficients, .. } => estimate_arm(&res, coefficients.len())?,
                CovarianceKind::ExplicitToeplitz { .. } => {
                    return Err(Error::InvalidModel(
                        "no estimator for explicit Toeplitz noise".into(),
                    ))
                }
            };
            let phi1 = fitted.ar_coefficients().first().copied();
            Ok((build_precision(&fitted.with_unit_innovation())?, phi1))
        }
    }
}

fn run_replicate(cfg: &ExperimentConfig, cell: &Cell, replicate: usize) -> Vec<ReplicateRecord> {
    let record = |estimator, recovered, best_lambda, phi1_hat, status| ReplicateRecord {
        cell: cell.id,
        design: cell.design.label(),
        noise: cell.noise.label(),
        n: cell.n,
        q: cell.q,
        k: cell.k,
        estimator,
        replicate,
        recovered,
        best_lambda,
        phi1_hat,
        status,
    };
    let data = match draw_replicate(cfg, cell, replicate) {
        Ok(d) => d,
        Err(_) => {
            return cfg
                .estimators
                .iter()
                .map(|&e| record(e, false, None, None, ReplicateStatus::Failed))
                .collect()
        }
    };
    cfg.estimators
        .iter()
        .map(|&estimator| {
            let (factor, phi1_hat) = match estimator_factor(estimator, &data) {
                Ok(f) => f,
                Err(_) => return record(estimator, false, None, None, ReplicateStatus::EstimationFailed),
            };
            let path = build_problem(&data.y, &data.x, &factor).and_then(|prob| solve_path(&prob, &cfg.lasso));
            match path {
                Ok(path) => {
                    let rec = sign_recovered(&path, &data.truth);
                    record(estimator, rec.any_lambda, rec.best_lambda, phi1_hat, ReplicateStatus::Ok)
                }
                Err(Error::NotConverged { .. }) => {
                    record(estimator, false, None, phi1_hat, ReplicateStatus::NotConverged)
                }
                Err(_) => record(estimator, false, None, phi1_hat, ReplicateStatus::Failed),
            }
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RecoveryReport> {
    run_experiment_with_cancel(cfg, None)
}

/// Runs on the current rayon pool. Replicates not yet started when `cancel`
/// becomes true are skipped and the report is marked incomplete.
pub fn run_experiment_with_cancel(
    cfg: &ExperimentConfig,
    cancel: Option<&AtomicBool>,
) -> Result<RecoveryReport> {
    cfg.validate()?;
    let cells = cfg.cells();
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replicates).map(move |r| (c, r)))
        .collect();
    let results: Vec<Option<Vec<ReplicateRecord>>> = tasks
        .par_iter()
        .map(|&(c, r)| {
            if cancel.is_some_and(|flag| flag.load(Ordering::Relaxed)) {
                None
            } else {
                Some(run_replicate(cfg, &cells[c], r))
            }
        })
        .collect();
    let complete = results.iter().all(Option::is_some);
    let records: Vec<ReplicateRecord> = results.into_iter().flatten().flatten().collect();
    let frequencies = aggregate(&cells, &cfg.estimators, &records);
    Ok(RecoveryReport {
        records,
        frequencies,
        complete,
    })
}

fn aggregate(cells: &[Cell], estimators: &[Estimator], records: &[ReplicateRecord]) -> Vec<CellFrequency> {
    let mut out = Vec::new();
    for cell in cells {
        for &estimator in estimators {
            let rows = records
                .iter()
                .filter(|r| r.cell == cell.id && r.estimator == estimator);
            let (mut total, mut hits, mut failures) = (0usize, 0usize, 0usize);
            for r in rows {
                total += 1;
                hits += usize::from(r.recovered);
                failures += usize::from(r.status != ReplicateStatus::Ok);
            }
            if total == 0 {
                continue;
            }
            out.push(CellFrequency {
                cell: cell.id,
                design: cell.design.label(),
                noise: cell.noise.label(),
                n: cell.n,
                q: cell.q,
                k: cell.k,
                estimator,
                replicates: total,
                recovered: hits,
                frequency: hits as f64 / total as f64,
                failures,
            });
        }
    }
    out
}
