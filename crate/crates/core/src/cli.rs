//! Command-line surface: `fit`, `simulate` and `audit`.
//!
//! Every command writes its outputs plus a `manifest.json` into `--out-dir`.
//! Exit codes: 0 success, 2 input error, 3 solver did not converge,
//! 4 numerical singularity, 130 interrupted (partial results written).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::covariance::{
    build_precision, estimate_ar1, estimate_arm, extract_residuals, CovarianceKind, CovarianceModel,
    PrecisionFactor,
};
use crate::error::Error;
use crate::lasso::{solve_lasso, solve_path, LassoConfig, SupportSpec};
use crate::linalg::DenseMatrix;
use crate::simulate::{
    gen_design, replicate_rng, run_experiment_with_cancel, CellFrequency, DesignSpec, ExperimentConfig,
    ReplicateRecord,
};
use crate::theory::{ar1_ic_bound, ar1_placement_ok, audit_assumptions, check_ic, AssumptionAudit, ICReport};
use crate::whitening::{build_problem, ProblemShape};

#[derive(Debug, Parser)]
#[command(name = "wlasso", version, about = "Whitened LASSO for multivariate regression with AR noise")]
pub struct Cli {
    /// Seed for random draws; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "WLASSO_THREADS")]
    pub threads: Option<usize>,

    /// Directory receiving the outputs.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the whitened LASSO path on observed data.
    Fit(FitArgs),
    /// Run a Monte Carlo sign-recovery campaign.
    Simulate(SimulateArgs),
    /// Audit the irrepresentable condition and related assumptions.
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
pub struct LassoArgs {
    /// Number of penalty values on the path.
    #[arg(long)]
    pub n_lambda: Option<usize>,

    /// Smallest penalty as a fraction of λ_max.
    #[arg(long)]
    pub lambda_min_ratio: Option<f64>,
}

impl LassoArgs {
    fn apply(&self, cfg: &mut LassoConfig) {
        if let Some(n) = self.n_lambda {
            cfg.n_lambda = n;
        }
        if let Some(r) = self.lambda_min_ratio {
            cfg.lambda_min_ratio = r;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Report the whole path: a support is recovered if any λ recovers it.
    Exists,
    /// Solve at the single penalty given by `--lambda`.
    Fixed,
}

/// Noise covariance used for whitening: `identity`, `ar1` or `arN`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CovChoice {
    Identity,
    Ar(usize),
}

impl FromStr for CovChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        if s == "identity" {
            return Ok(CovChoice::Identity);
        }
        s.strip_prefix("ar")
            .map(str::trim)
            .and_then(|m| m.parse::<usize>().ok())
            .filter(|m| *m >= 1)
            .map(CovChoice::Ar)
            .ok_or_else(|| format!("expected identity, ar1 or arN, got '{s}'"))
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Response matrix, n rows by q columns, with a header row.
    pub y: PathBuf,
    /// Design matrix, n rows by p columns, with a header row.
    pub x: PathBuf,
    #[arg(long, default_value = "ar1")]
    pub cov: CovChoice,
    #[command(flatten)]
    pub lasso: LassoArgs,
    #[arg(long, value_enum, default_value_t = Selection::Exists)]
    pub select: Selection,
    /// Penalty for `--select fixed`.
    #[arg(long, required_if_eq("select", "fixed"))]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment configuration (`.toml` or `.json`).
    pub config: PathBuf,
    /// Override the number of replicates per cell.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[command(flatten)]
    pub lasso: LassoArgs,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Design matrix CSV with a header row.
    #[arg(long, conflicts_with = "design", required_unless_present = "design")]
    pub x: Option<PathBuf>,
    /// Generated design: `balanced`, `unbalanced:R` or `regression:RHO[:P]`.
    #[arg(long, requires = "n")]
    pub design: Option<String>,
    /// Rows of the generated design.
    #[arg(long)]
    pub n: Option<usize>,
    /// Support CSV with columns `j,sign` and optionally `beta` (zero-based `j`).
    #[arg(long)]
    pub truth: PathBuf,
    /// AR(1) coefficient of the noise (unit innovation variance).
    #[arg(long, conflicts_with = "cov_file", required_unless_present = "cov_file", requires = "q")]
    pub phi1: Option<f64>,
    /// Covariance model as JSON, e.g. `{"kind":"ar1","phi1":0.5,"sigma2":1,"dim":20}`.
    #[arg(long)]
    pub cov_file: Option<PathBuf>,
    /// Number of response columns.
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, default_value_t = 0.125)]
    pub c1: f64,
    #[arg(long, default_value_t = 0.125)]
    pub c2: f64,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Singular(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Singular(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NotConverged { .. } => CliError::NotConverged(msg),
            Error::NotPositiveDefinite { .. } | Error::RankDeficient | Error::SingularSubGram => {
                CliError::Singular(msg)
            }
            _ => CliError::Input(msg),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the canonical JSON of the effective configuration.
    pub config_digest: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub complete: bool,
    pub outputs: Vec<String>,
}

/// Canonical JSON (object keys sorted) and its SHA-256 digest.
pub fn config_digest<T: Serialize>(config: &T) -> CliResult<(serde_json::Value, String)> {
    let value = serde_json::to_value(config).map_err(|e| CliError::Input(e.to_string()))?;
    let canonical = serde_json::to_string(&value).map_err(|e| CliError::Input(e.to_string()))?;
    Ok((value, hex::encode(Sha256::digest(canonical.as_bytes()))))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Reads a numeric CSV with a header row; errors name the offending line.
pub fn read_matrix(path: &Path) -> CliResult<DenseMatrix> {
    let name = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{name}: {e}")))?;
    let width = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{name}: {e}")))?
        .len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Input(format!("{name}: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(CliError::Input(format!(
                "{name}: line {line}: expected {width} fields, found {}",
                record.len()
            )));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        CliError::Input(format!(
                            "{name}: line {line}: field {} is not a finite number: '{field}'",
                            col + 1
                        ))
                    })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{name}: no data rows")));
    }
    Ok(DenseMatrix::from_rows(&rows)?)
}

#[derive(Debug, Deserialize)]
struct TruthRow {
    j: usize,
    sign: i8,
    #[serde(default)]
    beta: Option<f64>,
}

/// Reads a support CSV (`j,sign[,beta]`).
pub fn read_truth(path: &Path, dim: usize) -> CliResult<SupportSpec> {
    let name = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{name}: {e}")))?;
    let mut rows: Vec<TruthRow> = Vec::new();
    for result in reader.deserialize::<TruthRow>() {
        rows.push(result.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Input(format!("{name}: line {line}: {e}"))
        })?);
    }
    rows.sort_by_key(|r| r.j);
    let magnitudes: Option<Vec<f64>> = rows.iter().map(|r| r.beta.map(f64::abs)).collect();
    let truth = SupportSpec::new(
        rows.iter().map(|r| r.j).collect(),
        rows.iter().map(|r| r.sign).collect(),
        dim,
    )
    .map_err(|e| CliError::Input(format!("{name}: {e}")))?;
    match magnitudes {
        Some(m) if !m.is_empty() => Ok(truth.with_magnitudes(m)?),
        _ => Ok(truth),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn manifest<T: Serialize>(
        mut self,
        command: &str,
        config: &T,
        seed: Option<u64>,
        started: String,
        complete: bool,
    ) -> CliResult<()> {
        let (config, config_digest) = config_digest(config)?;
        let path = self.path("manifest.json");
        let manifest = RunManifest {
            command: command.to_string(),
            config_digest,
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started,
            finished: now(),
            complete,
            outputs: self.files,
        };
        write_json(&path, &manifest)
    }
}

fn thread_pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    builder.build().map_err(|e| CliError::Input(e.to_string()))
}

fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

#[derive(Debug, Serialize)]
struct FitConfig {
    y_sha256: String,
    x_sha256: String,
    cov: CovChoice,
    lasso: LassoConfig,
    select: Selection,
    lambda: Option<f64>,
}

#[derive(Debug, Serialize)]
struct CoefficientRow {
    lambda_index: usize,
    lambda: f64,
    j: usize,
    r: usize,
    k: usize,
    beta: f64,
}

#[derive(Debug, Serialize)]
struct SupportRow {
    lambda_index: usize,
    lambda: f64,
    j: usize,
    r: usize,
    k: usize,
    sign: i8,
}

#[derive(Debug, Serialize)]
struct CovarianceReport {
    choice: CovChoice,
    /// Fitted model; absent for the identity.
    model: Option<CovarianceModel>,
    /// Autoregressive coefficients `φ̂`.
    coefficients: Vec<f64>,
    sigma2: Option<f64>,
}

pub fn cmd_fit(args: &FitArgs, out_dir: &Path) -> CliResult<()> {
    let started = now();
    let y = read_matrix(&args.y)?;
    let x = read_matrix(&args.x)?;
    if y.rows() != x.rows() {
        return Err(CliError::Input(format!(
            "Y has {} rows but X has {}",
            y.rows(),
            x.rows()
        )));
    }
    if x.cols() >= x.rows() {
        return Err(CliError::Input(format!(
            "need p < n, got p={} and n={}",
            x.cols(),
            x.rows()
        )));
    }
    let mut lasso = LassoConfig::default();
    args.lasso.apply(&mut lasso);
    lasso.validate()?;
    let shape = ProblemShape::new(x.rows(), x.cols(), y.cols())?;

    let (factor, model) = match args.cov {
        CovChoice::Identity => (PrecisionFactor::identity(shape.q), None),
        CovChoice::Ar(m) => {
            let res = extract_residuals(&y, &x)?;
            let model = if m == 1 { estimate_ar1(&res)? } else { estimate_arm(&res, m)? };
            (build_precision(&model.with_unit_innovation())?, Some(model))
        }
    };
    let prob = build_problem(&y, &x, &factor)?;

    let (lambdas, betas) = match args.select {
        Selection::Exists => {
            let path = solve_path(&prob, &lasso)?;
            (path.lambdas, path.betas)
        }
        Selection::Fixed => {
            let lambda = args
                .lambda
                .ok_or_else(|| CliError::Input("--select fixed requires --lambda".into()))?;
            let sol = solve_lasso(&prob, lambda, &vec![0.0; shape.n_coef()], &lasso)?;
            (vec![lambda], vec![sol.beta])
        }
    };

    let mut coefficients = Vec::with_capacity(lambdas.len() * shape.n_coef());
    let mut support = Vec::new();
    for (li, (&lambda, beta)) in lambdas.iter().zip(&betas).enumerate() {
        for (j, &b) in beta.iter().enumerate() {
            let (r, k) = shape.coordinate(j);
            coefficients.push(CoefficientRow {
                lambda_index: li,
                lambda,
                j,
                r,
                k,
                beta: b,
            });
            if b != 0.0 {
                support.push(SupportRow {
                    lambda_index: li,
                    lambda,
                    j,
                    r,
                    k,
                    sign: if b > 0.0 { 1 } else { -1 },
                });
            }
        }
    }

    let mut out = Outputs::new(out_dir)?;
    write_csv(&out.path("coefficients.csv"), &coefficients)?;
    write_csv(&out.path("support.csv"), &support)?;
    let report = CovarianceReport {
        choice: args.cov,
        coefficients: model.as_ref().map(|m| m.ar_coefficients()).unwrap_or_default(),
        sigma2: model.as_ref().and_then(CovarianceModel::innovation_variance),
        model,
    };
    write_json(&out.path("covariance.json"), &report)?;
    let config = FitConfig {
        y_sha256: sha256_file(&args.y)?,
        x_sha256: sha256_file(&args.x)?,
        cov: args.cov,
        lasso,
        select: args.select,
        lambda: args.lambda.filter(|_| args.select == Selection::Fixed),
    };
    out.manifest("fit", &config, None, started, true)
}

/// Loads an experiment configuration, choosing the format by extension.
pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

fn install_interrupt_handler() {
    static INSTALLED: std::sync::Once = std::sync::Once::new();
    INSTALLED.call_once(|| {
        // SAFETY: the handler only performs an atomic store, which is async-signal-safe.
        let _ = unsafe {
            signal_hook_registry::register(libc::SIGINT, || INTERRUPTED.store(true, Ordering::SeqCst))
        };
    });
}

/// Returns whether every replicate finished.
pub fn cmd_simulate(args: &SimulateArgs, seed: Option<u64>, threads: Option<usize>, out_dir: &Path) -> CliResult<bool> {
    let started = now();
    let mut cfg = load_config(&args.config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    args.lasso.apply(&mut cfg.lasso);
    cfg.validate()?;

    install_interrupt_handler();
    let pool = thread_pool(threads)?;
    let report = pool.install(|| run_experiment_with_cancel(&cfg, Some(&INTERRUPTED)))?;

    let mut out = Outputs::new(out_dir)?;
    write_csv::<ReplicateRecord>(&out.path("replicates.csv"), &report.records)?;
    write_csv::<CellFrequency>(&out.path("frequencies.csv"), &report.frequencies)?;
    out.manifest("simulate", &cfg, Some(cfg.seed), started, report.complete)?;
    Ok(report.complete)
}

/// Parses `balanced`, `unbalanced:R` or `regression:RHO[:P]`.
pub fn parse_design(s: &str) -> CliResult<DesignSpec> {
    let bad = || CliError::Input(format!("unrecognised design '{s}'"));
    let parts: Vec<&str> = s.trim().split(':').collect();
    let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
    let spec = match parts.as_slice() {
        ["balanced"] => DesignSpec::BalancedAnova2,
        ["unbalanced", r] => DesignSpec::UnbalancedAnova2 { r: num(r)? },
        ["regression", rho] => DesignSpec::CorrelatedRegression {
            p: crate::simulate::DEFAULT_REGRESSION_P,
            rho: num(rho)?,
        },
        ["regression", rho, p] => DesignSpec::CorrelatedRegression {
            p: p.parse().map_err(|_| bad())?,
            rho: num(rho)?,
        },
        _ => return Err(bad()),
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Serialize)]
struct AuditConfig {
    x_sha256: Option<String>,
    design: Option<DesignSpec>,
    n: Option<usize>,
    truth_sha256: String,
    covariance: CovarianceModel,
    c1: f64,
    c2: f64,
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct AuditReport {
    pub covariance: CovarianceModel,
    pub support: SupportSpec,
    pub ic: ICReport,
    pub assumptions: AssumptionAudit,
    /// Closed-form IC bound, for AR(1) noise.
    pub ar1_ic_bound: Option<f64>,
    /// Whether the support satisfies the placement hypotheses of that bound.
    pub ar1_placement_ok: Option<bool>,
}

pub fn cmd_audit(args: &AuditArgs, seed: Option<u64>, out_dir: &Path) -> CliResult<()> {
    let started = now();
    let (x, design) = match (&args.x, &args.design) {
        (Some(path), _) => (read_matrix(path)?, None),
        (None, Some(d)) => {
            let spec = parse_design(d)?;
            let n = args.n.ok_or_else(|| CliError::Input("--design requires --n".into()))?;
            let mut rng = replicate_rng(seed.unwrap_or(0), 0, 0);
            (gen_design(&spec, n, &mut rng)?, Some(spec))
        }
        (None, None) => return Err(CliError::Input("one of --x or --design is required".into())),
    };
    let model = match (args.phi1, &args.cov_file) {
        (Some(phi1), _) => {
            let q = args.q.ok_or_else(|| CliError::Input("--phi1 requires --q".into()))?;
            CovarianceModel::ar1(phi1, 1.0, q)?
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)?;
            let model: CovarianceModel = serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            match args.q {
                Some(q) => model.with_dim(q)?,
                None => model,
            }
        }
        (None, None) => return Err(CliError::Input("one of --phi1 or --cov-file is required".into())),
    };
    let shape = ProblemShape::new(x.rows(), x.cols(), model.dim())?;
    let truth = read_truth(&args.truth, shape.n_coef())?;
    let factor = build_precision(&model)?;
    let prob = build_problem(&DenseMatrix::zeros(shape.n, shape.q), &x, &factor)?;
    let ic = check_ic(&prob, &truth)?;
    let assumptions = audit_assumptions(&prob, &truth, args.c1, args.c2)?;
    let (bound, placement) = match model.kind() {
        CovarianceKind::Ar1 { phi1, .. } => (Some(ar1_ic_bound(*phi1)), Some(ar1_placement_ok(&truth, shape.p, shape.q))),
        _ => (None, None),
    };
    let report = AuditReport {
        covariance: model.clone(),
        support: truth,
        ic,
        assumptions,
        ar1_ic_bound: bound,
        ar1_placement_ok: placement,
    };

    let mut out = Outputs::new(out_dir)?;
    write_json(&out.path("audit.json"), &report)?;
    let config = AuditConfig {
        x_sha256: args.x.as_deref().map(sha256_file).transpose()?,
        n: design.as_ref().map(|_| shape.n),
        design,
        truth_sha256: sha256_file(&args.truth)?,
        covariance: model,
        c1: args.c1,
        c2: args.c2,
        seed: seed.filter(|_| args.design.is_some()),
    };
    out.manifest("audit", &config, config.seed, started, true)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> ExitCode {
    let result = match &cli.command {
        Command::Fit(args) => thread_pool(cli.threads)
            .and_then(|pool| pool.install(|| cmd_fit(args, &cli.out_dir)))
            .map(|()| true),
        Command::Simulate(args) => cmd_simulate(args, cli.seed, cli.threads, &cli.out_dir),
        Command::Audit(args) => cmd_audit(args, cli.seed, &cli.out_dir).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("interrupted: partial results written to {}", cli.out_dir.display());
            ExitCode::from(130)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn main() -> ExitCode {
    run(Cli::parse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn cov_choice_parsing() {
        assert_eq!("identity".parse::<CovChoice>(), Ok(CovChoice::Identity));
        assert_eq!("ar1".parse::<CovChoice>(), Ok(CovChoice::Ar(1)));
        assert_eq!("AR5".parse::<CovChoice>(), Ok(CovChoice::Ar(5)));
        assert_eq!("ar 3".parse::<CovChoice>(), Ok(CovChoice::Ar(3)));
        assert!("ar0".parse::<CovChoice>().is_err());
        assert!("toeplitz".parse::<CovChoice>().is_err());
    }

    #[test]
    fn design_parsing() {
        assert_eq!(parse_design("balanced").unwrap(), DesignSpec::BalancedAnova2);
        assert_eq!(
            parse_design("unbalanced:0.1").unwrap(),
            DesignSpec::UnbalancedAnova2 { r: 0.1 }
        );
        assert_eq!(
            parse_design("regression:0.6:4").unwrap(),
            DesignSpec::CorrelatedRegression { p: 4, rho: 0.6 }
        );
        assert!(parse_design("unbalanced:2").is_err());
        assert!(parse_design("cubic").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(Error::SingularSubGram).exit_code(), 4);
        assert_eq!(CliError::from(Error::RankDeficient).exit_code(), 4);
        assert_eq!(CliError::from(Error::InvalidConfig("x".into())).exit_code(), 2);
        let nc = Error::NotConverged {
            lambda: 1.0,
            lambda_index: None,
            sweeps: 1,
            kkt_residual: 1.0,
            beta: vec![],
        };
        assert_eq!(CliError::from(nc).exit_code(), 3);
    }

    #[test]
    fn digest_tracks_semantic_fields() {
        let base = LassoConfig::default();
        let (_, a) = config_digest(&base).unwrap();
        let (_, b) = config_digest(&base.clone()).unwrap();
        assert_eq!(a, b);
        let mut changed = base.clone();
        changed.n_lambda += 1;
        assert_ne!(a, config_digest(&changed).unwrap().1);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn matrix_reader_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        fs::write(&path, "a,b\n1,2\n3,x\n").unwrap();
        let err = read_matrix(&path).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        fs::write(&path, "a,b\n1,2\n3\n").unwrap();
        assert!(read_matrix(&path).unwrap_err().to_string().contains("line 3"));
        fs::write(&path, "a,b\n1,2.5\n-3,4e-3\n").unwrap();
        let m = read_matrix(&path).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 2.5, -3.0, 4e-3]);
    }

    #[test]
    fn truth_reader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        fs::write(&path, "j,sign,beta\n5,-1,-0.5\n2,1,0.25\n").unwrap();
        let t = read_truth(&path, 10).unwrap();
        assert_eq!(t.indices(), &[2, 5]);
        assert_eq!(t.signs(), &[1, -1]);
        assert_eq!(t.magnitudes(), Some(&[0.25, 0.5][..]));
        fs::write(&path, "j,sign\n12,1\n").unwrap();
        assert!(read_truth(&path, 10).is_err());
        fs::write(&path, "j,sign\n1,abc\n").unwrap();
        assert!(read_truth(&path, 10).unwrap_err().to_string().contains("line 2"));
    }
}
