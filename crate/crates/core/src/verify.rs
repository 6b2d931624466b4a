//! Monte Carlo harness comparing simulated top eigenvalues with their
//! limit laws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garch_tail::{solve_tail_index, MomentFunction};
use crate::limits::{
    b_empirical, b_sv_analytic, frechet_cdf, limit_topk_sample, BEmpiricalConfig, LimitLaw,
    DEFAULT_MIN_EXCEEDANCES, DEFAULT_SV_MOMENT_DRAWS, DEFAULT_X_GRID,
};
use crate::processes::{ProcessKind, ProcessSpec};
use crate::seed::Seeder;
use crate::spectra::{build_matrix, diagonal_comparison};
use crate::stats::RatioSummary;
use crate::tail::{default_hill_k, hill_estimate, DEFAULT_CALIBRATION_DRAWS};

/// Fewer replications than this cannot support a KS comparison.
pub const MIN_KS_REPS: usize = 30;
pub const DEFAULT_B_REPS: usize = 20_000;

/// How the dimension `p` grows with the sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Growth {
    /// `p = round(n^beta)`.
    Beta(f64),
    /// `p = round(n^kappa)`, `kappa >= 1`.
    Kappa(f64),
    Explicit(usize),
}

impl Growth {
    pub fn dimension(&self, n: usize) -> usize {
        match *self {
            Growth::Beta(e) | Growth::Kappa(e) => ((n as f64).powf(e).round() as usize).max(1),
            Growth::Explicit(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthCheck {
    Ok,
    Warning(String),
}

/// Upper bound on `beta` when `1 < alpha < 2`, infinite otherwise.
pub fn beta_bound(alpha: f64) -> f64 {
    if alpha > 1.0 && alpha < 2.0 {
        (2.0 - alpha) / (alpha - 1.0)
    } else {
        f64::INFINITY
    }
}

/// Checks the growth hypotheses of the limit theorems. They are sufficient
/// conditions, so a violation is only ever a warning.
pub fn validate_growth(alpha: f64, growth: &Growth, n: usize) -> GrowthCheck {
    let bound = beta_bound(alpha);
    match *growth {
        Growth::Beta(beta) if beta <= 0.0 => {
            GrowthCheck::Warning(format!("beta = {beta} must be positive"))
        }
        Growth::Beta(beta) if beta >= bound => GrowthCheck::Warning(format!(
            "beta = {beta} violates beta < (2-alpha)/(alpha-1) = {bound:.6} for alpha = {alpha}"
        )),
        Growth::Kappa(kappa) if kappa < 1.0 => {
            GrowthCheck::Warning(format!("kappa = {kappa} is below 1; the p >= n regime needs kappa >= 1"))
        }
        Growth::Explicit(p) if p > 1 && n > 1 && p < n => {
            let beta = (p as f64).ln() / (n as f64).ln();
            if beta >= bound {
                GrowthCheck::Warning(format!(
                    "p = {p}, n = {n} implies beta = {beta:.4} >= (2-alpha)/(alpha-1) = {bound:.6}"
                ))
            } else {
                GrowthCheck::Ok
            }
        }
        _ => GrowthCheck::Ok,
    }
}

/// Two-sided KS distance between the ECDF of `sample` and `cdf`.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Parameter("ks sample is empty".into()));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(d.clamp(0.0, 1.0))
}

/// Limiting Kolmogorov CDF `P(sqrt(n) D_n <= x)`.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (1.0 - 2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic `level` quantile of `D_n`, i.e. `c_level / sqrt(n)`.
pub fn kolmogorov_band(n: usize, level: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 5.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub ks_largest: f64,
    pub ks_spacing: f64,
    /// Half-width of the accepted band around 1 for the median of
    /// `lambda_(1) / max X_it^2`.
    pub ratio_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { ks_largest: 0.08, ks_spacing: 0.08, ratio_band: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub process: ProcessSpec,
    /// Tail index; derived from the process when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub n: usize,
    pub growth: Growth,
    #[serde(default = "default_k")]
    pub k: usize,
    pub reps: usize,
    pub seed: u64,
    /// Grid for the large-deviation estimate of `b` (GARCH rows).
    #[serde(default = "default_x_grid")]
    pub x_grid: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Rows simulated for the GARCH estimate of `b`.
    #[serde(default = "default_b_reps")]
    pub b_reps: usize,
    #[serde(default = "default_calibration_draws")]
    pub calibration_draws: usize,
}

fn default_k() -> usize {
    2
}

fn default_x_grid() -> Vec<f64> {
    DEFAULT_X_GRID.to_vec()
}

fn default_b_reps() -> usize {
    DEFAULT_B_REPS
}

fn default_calibration_draws() -> usize {
    DEFAULT_CALIBRATION_DRAWS
}

impl ExperimentConfig {
    pub fn new(process: ProcessSpec, n: usize, growth: Growth, reps: usize, seed: u64) -> Self {
        Self {
            process,
            alpha: None,
            n,
            growth,
            k: default_k(),
            reps,
            seed,
            x_grid: default_x_grid(),
            tolerances: Tolerances::default(),
            b_reps: DEFAULT_B_REPS,
            calibration_draws: DEFAULT_CALIBRATION_DRAWS,
        }
    }

    pub fn dimension(&self) -> usize {
        self.growth.dimension(self.n)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.reps < MIN_KS_REPS {
            return Err(Error::Config(format!(
                "reps = {} is below the KS minimum of {MIN_KS_REPS}",
                self.reps
            )));
        }
        if self.dimension() == 0 {
            return Err(Error::Config("dimension p must be at least 1".into()));
        }
        self.process.validate()
    }

    /// Tail index: the configured value, the noise law's index for iid/SV,
    /// the moment-equation root for GARCH(1,1), else a Hill estimate.
    pub fn resolve_alpha(&self) -> Result<f64> {
        let alpha = if let Some(a) = self.alpha {
            a
        } else if let Some(a) = self.process.declared_alpha() {
            a
        } else {
            match &self.process.kind {
                ProcessKind::Garch(g) => match g.order_one() {
                    Some((a1, b1)) if a1 > 0.0 => {
                        solve_tail_index(&MomentFunction::new(a1, b1)?, 1e-8)?.alpha
                    }
                    _ => {
                        let draws = self.process.calibration_draws(
                            self.calibration_draws,
                            Seeder::new(self.seed).tagged("calibration"),
                        )?;
                        hill_estimate(&draws, default_hill_k(draws.len()))?
                    }
                },
                _ => unreachable!("iid and sv declare alpha"),
            }
        };
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::Config(format!(
                "tail index {alpha} is outside (0,2); the heavy-tailed limits do not apply"
            )));
        }
        Ok(alpha)
    }
}

/// Top of the spectrum for one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub eigenvalues: Vec<f64>,
    pub max_row_sum: f64,
    pub max_entry_sq: f64,
}

/// Raw replications of an experiment, before any comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraRun {
    pub alpha: f64,
    pub n: usize,
    pub p: usize,
    /// `a_np^2`.
    pub normalizer: f64,
    pub reps: Vec<RepOutcome>,
}

/// Simulates `cfg.reps` matrices and keeps the top `max(k, 2)` eigenvalues
/// (capped at `min(p, n)`). Replication `r` uses the stream tree under
/// `(seed, "matrix", r)` regardless of scheduling.
pub fn simulate_spectra(cfg: &ExperimentConfig) -> Result<SpectraRun> {
    cfg.validate()?;
    let alpha = cfg.resolve_alpha()?;
    let (n, p) = (cfg.n, cfg.dimension());
    let root = Seeder::new(cfg.seed);
    let a_np = cfg
        .process
        .normalizing_sequence(cfg.calibration_draws, root.tagged("calibration"))?
        .at(n as u64 * p as u64)?;
    let keep = cfg.k.max(2).min(p.min(n));
    let matrices = root.tagged("matrix");
    let reps: Vec<RepOutcome> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let m = build_matrix(&cfg.process, p, n, matrices.index(r as u64))?;
            let d = diagonal_comparison(&m, keep)?;
            Ok(RepOutcome {
                eigenvalues: d.eigenvalues,
                max_row_sum: d.row_sums[0],
                max_entry_sq: d.max_entry_sq,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SpectraRun { alpha, n, p, normalizer: a_np * a_np, reps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BSource {
    /// iid rows: `b = 1`.
    Iid,
    /// `E sigma^alpha` in closed form.
    SvClosedForm,
    /// `E sigma^alpha` by Monte Carlo.
    SvMonteCarlo,
    /// Pooled large-deviation estimate.
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    /// `[lower, upper]` acceptance interval.
    pub accept: [f64; 2],
    pub enabled: bool,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(name: &str, value: f64, accept: [f64; 2], enabled: bool) -> Self {
        Self {
            name: name.into(),
            value,
            accept,
            enabled,
            passed: value >= accept[0] && value <= accept[1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub alpha: f64,
    pub n: usize,
    pub p: usize,
    pub reps: usize,
    /// `a_np^2`.
    pub normalizer: f64,
    pub b_used: f64,
    pub b_std_error: f64,
    pub b_source: BSource,
    pub ks_largest: f64,
    /// `None` when `min(p, n) < 2`.
    pub ks_uniform_spacing: Option<f64>,
    /// 99% Kolmogorov band for `reps` samples, for reference.
    pub ks_band_99: f64,
    /// Sorted normalized `lambda_(1)` with ECDF values.
    pub ecdf_points: Vec<(f64, f64)>,
    pub ratio_max_diag: RatioSummary,
    pub ratio_max_entry: RatioSummary,
    pub tolerances: Tolerances,
    pub checks: Vec<CheckOutcome>,
    pub warnings: Vec<String>,
    /// All enabled checks passed.
    pub passed: bool,
}

impl VerificationReport {
    pub fn limit_law(&self) -> LimitLaw {
        LimitLaw { alpha: self.alpha, b: self.b_used }
    }
}

fn resolve_b(cfg: &ExperimentConfig, alpha: f64, p: usize) -> Result<(f64, f64, BSource)> {
    let root = Seeder::new(cfg.seed);
    match &cfg.process.kind {
        ProcessKind::Iid(_) => Ok((1.0, 0.0, BSource::Iid)),
        ProcessKind::Sv { vol, .. } => {
            let est = b_sv_analytic(vol, alpha, DEFAULT_SV_MOMENT_DRAWS, &mut root.tagged("b-sv").rng())?;
            let source = if est.std_error == 0.0 { BSource::SvClosedForm } else { BSource::SvMonteCarlo };
            Ok((est.value, est.std_error, source))
        }
        ProcessKind::Garch(_) => {
            let bcfg = BEmpiricalConfig {
                n: cfg.n,
                p,
                reps: cfg.b_reps,
                x_grid: cfg.x_grid.clone(),
                min_exceedances: DEFAULT_MIN_EXCEEDANCES,
                calibration_draws: cfg.calibration_draws,
            };
            // Shares the "calibration" stream with simulate_spectra, so both
            // use the same a_np.
            let est = b_empirical(&cfg.process, alpha, &bcfg, root)?;
            Ok((est.pooled, est.pooled_std_error, BSource::Empirical))
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    let run = simulate_spectra(cfg)?;
    let alpha = run.alpha;
    let mut warnings = Vec::new();
    if let GrowthCheck::Warning(w) = validate_growth(alpha, &cfg.growth, cfg.n) {
        warnings.push(w);
    }
    let (b_used, b_std_error, b_source) = resolve_b(cfg, alpha, run.p)?;
    let law = LimitLaw::new(alpha, b_used)?;

    let largest: Vec<f64> = run.reps.iter().map(|r| r.eigenvalues[0] / run.normalizer).collect();
    let ks_largest = ks_distance(&largest, |x| {
        if x > 0.0 {
            frechet_cdf(&law, x).expect("validated law")
        } else {
            0.0
        }
    })?;
    let ks_uniform_spacing = if run.p.min(run.n) >= 2 {
        let spacing: Vec<f64> = run
            .reps
            .iter()
            .map(|r| (r.eigenvalues[1] / r.eigenvalues[0]).powf(alpha / 2.0))
            .collect();
        Some(ks_distance(&spacing, |u| u.clamp(0.0, 1.0))?)
    } else {
        warnings.push("min(p, n) < 2: spacing statistic unavailable".into());
        None
    };

    let mut sorted = largest.clone();
    sorted.sort_by(f64::total_cmp);
    let reps = sorted.len();
    let ecdf_points = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (x, (i + 1) as f64 / reps as f64))
        .collect();

    let diag: Vec<f64> = run.reps.iter().map(|r| r.eigenvalues[0] / r.max_row_sum).collect();
    let entry: Vec<f64> = run.reps.iter().map(|r| r.eigenvalues[0] / r.max_entry_sq).collect();
    let ratio_max_diag = RatioSummary::from_values(&diag);
    let ratio_max_entry = RatioSummary::from_values(&entry);

    let tol = cfg.tolerances;
    let entry_ratio_applies = matches!(cfg.growth, Growth::Kappa(_))
        && !matches!(cfg.process.kind, ProcessKind::Garch(_));
    let mut checks = vec![CheckOutcome::new(
        "ks_largest",
        ks_largest,
        [0.0, tol.ks_largest],
        !law.is_degenerate(),
    )];
    if let Some(ks) = ks_uniform_spacing {
        checks.push(CheckOutcome::new("ks_uniform_spacing", ks, [0.0, tol.ks_spacing], true));
    }
    checks.push(CheckOutcome::new(
        "ratio_max_entry_median",
        ratio_max_entry.median,
        [1.0 - tol.ratio_band, 1.0 + tol.ratio_band],
        entry_ratio_applies,
    ));
    let passed = checks.iter().filter(|c| c.enabled).all(|c| c.passed);

    Ok(VerificationReport {
        alpha,
        n: run.n,
        p: run.p,
        reps,
        normalizer: run.normalizer,
        b_used,
        b_std_error,
        b_source,
        ks_largest,
        ks_uniform_spacing,
        ks_band_99: kolmogorov_band(reps, 0.99),
        ecdf_points,
        ratio_max_diag,
        ratio_max_entry,
        tolerances: tol,
        checks,
        warnings,
        passed,
    })
}

/// KS statistics of draws taken straight from the limit law, for checking
/// the harness itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub ks_largest: f64,
    pub ks_spacing: f64,
    pub band_99: f64,
}

pub fn harness_self_check(law: &LimitLaw, reps: usize, seed: u64) -> Result<SelfCheck> {
    if reps == 0 {
        return Err(Error::Parameter("reps must be positive".into()));
    }
    let root = Seeder::new(seed).tagged("self-check");
    let draws: Vec<Vec<f64>> = (0..reps)
        .map(|r| limit_topk_sample(law, 2, &mut root.index(r as u64).rng()))
        .collect::<Result<_>>()?;
    let first: Vec<f64> = draws.iter().map(|d| d[0]).collect();
    let spacing: Vec<f64> = draws.iter().map(|d| (d[1] / d[0]).powf(law.alpha / 2.0)).collect();
    Ok(SelfCheck {
        ks_largest: ks_distance(&first, |x| frechet_cdf(law, x).unwrap_or(0.0))?,
        ks_spacing: ks_distance(&spacing, |u| u.clamp(0.0, 1.0))?,
        band_99: kolmogorov_band(reps, 0.99),
    })
}
