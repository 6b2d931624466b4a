//! Limit laws of the normalized top eigenvalues: points
//! `b^(2/alpha) Gamma_i^(-2/alpha)` built on the arrival times `Gamma_i` of
//! a unit-rate Poisson process, their Fréchet marginal, and the constant `b`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::{simulate_path, ProcessSpec, VolSpec};
use crate::seed::Seeder;
use crate::spectra::dot2;
use crate::stats::mean_and_se;
use crate::tail::DEFAULT_CALIBRATION_DRAWS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    pub alpha: f64,
    /// `b = 0` means the normalized eigenvalues vanish in the limit.
    pub b: f64,
}

impl LimitLaw {
    pub fn new(alpha: f64, b: f64) -> Result<Self> {
        let law = Self { alpha, b };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::Parameter(format!("alpha must lie in (0,2), got {}", self.alpha)));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::Parameter(format!("b must be >= 0, got {}", self.b)));
        }
        Ok(())
    }

    pub fn is_degenerate(&self) -> bool {
        self.b == 0.0
    }
}

/// `Gamma_1 < ... < Gamma_k`, partial sums of iid unit exponentials.
pub fn gamma_points<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let mut acc = 0.0;
    Ok((0..k)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            acc += e;
            acc
        })
        .collect())
}

/// One draw of the limiting top-k vector, strictly decreasing.
pub fn limit_topk_sample<R: Rng + ?Sized>(law: &LimitLaw, k: usize, rng: &mut R) -> Result<Vec<f64>> {
    law.validate()?;
    if law.is_degenerate() {
        return Err(Error::DegenerateLimit);
    }
    let scale = law.b.powf(2.0 / law.alpha);
    let expo = -2.0 / law.alpha;
    Ok(gamma_points(k, rng)?.into_iter().map(|g| scale * g.powf(expo)).collect())
}

/// `exp(-b x^(-alpha/2))`, the law of `b^(2/alpha) Gamma_1^(-2/alpha)`.
pub fn frechet_cdf(law: &LimitLaw, x: f64) -> Result<f64> {
    law.validate()?;
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain(format!("frechet cdf needs x > 0, got {x}")));
    }
    Ok((-law.b * x.powf(-law.alpha / 2.0)).exp())
}

/// A Monte Carlo or closed-form value with its standard error (0 when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// `E sigma^alpha = exp(alpha^2 tau^2 / 2)` for `log sigma ~ N(0, tau^2)`.
pub fn exp_gaussian_moment(alpha: f64, log_sigma_std: f64) -> f64 {
    (0.5 * alpha * alpha * log_sigma_std * log_sigma_std).exp()
}

pub const DEFAULT_SV_MOMENT_DRAWS: usize = 1_000_000;

/// `b = E sigma_0^alpha` for a stochastic volatility row process: closed
/// form for exp-Gaussian volatility, Monte Carlo over `draws` samples of
/// the moving average for the m-dependent construction.
pub fn b_sv_analytic<R: Rng + ?Sized>(vol: &VolSpec, alpha: f64, draws: usize, rng: &mut R) -> Result<Estimate> {
    vol.validate()?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    match vol {
        VolSpec::ExpGaussianLinear { .. } => {
            let tau = vol.log_sigma_std().expect("exp-gaussian variant");
            Ok(Estimate { value: exp_gaussian_moment(alpha, tau), std_error: 0.0 })
        }
        VolSpec::MDependent { m, mu, tau } => {
            if draws < 2 {
                return Err(Error::Parameter("need at least 2 Monte Carlo draws".into()));
            }
            let eta = LogNormal::new(*mu, *tau).expect("validated");
            let width = (*m + 1) as f64;
            let values: Vec<f64> = (0..draws)
                .map(|_| {
                    let sigma = (0..=*m).map(|_| eta.sample(rng)).sum::<f64>() / width;
                    sigma.powf(alpha)
                })
                .collect();
            let (value, std_error) = mean_and_se(&values);
            Ok(Estimate { value, std_error })
        }
    }
}

pub const DEFAULT_X_GRID: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
pub const DEFAULT_MIN_EXCEEDANCES: u64 = 50;

/// Settings of the large-deviation estimator of `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BEmpiricalConfig {
    pub n: usize,
    pub p: usize,
    /// Number of simulated rows.
    pub reps: usize,
    #[serde(default = "default_x_grid")]
    pub x_grid: Vec<f64>,
    #[serde(default = "default_min_exceedances")]
    pub min_exceedances: u64,
    /// Draws used to calibrate `a_np` when it has no closed form.
    #[serde(default = "default_calibration_draws")]
    pub calibration_draws: usize,
}

fn default_x_grid() -> Vec<f64> {
    DEFAULT_X_GRID.to_vec()
}

fn default_min_exceedances() -> u64 {
    DEFAULT_MIN_EXCEEDANCES
}

fn default_calibration_draws() -> usize {
    DEFAULT_CALIBRATION_DRAWS
}

impl BEmpiricalConfig {
    pub fn new(n: usize, p: usize, reps: usize) -> Self {
        Self {
            n,
            p,
            reps,
            x_grid: default_x_grid(),
            min_exceedances: DEFAULT_MIN_EXCEEDANCES,
            calibration_draws: DEFAULT_CALIBRATION_DRAWS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BPoint {
    pub x: f64,
    pub b: f64,
    pub std_error: f64,
    pub exceedances: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BEstimate {
    /// `a_np` (not squared).
    pub normalizer: f64,
    pub points: Vec<BPoint>,
    pub pooled: f64,
    /// Accounts for the nesting of the exceedance events across the grid.
    pub pooled_std_error: f64,
    pub reps: usize,
}

/// Estimates `b` from `p P(sum_t X_t^2 > a_np^2 x) -> b x^(-alpha/2)`:
/// `b(x) = x^(alpha/2) p (fraction of rows exceeding a_np^2 x)`.
///
/// A pilot on the first tenth of the rows must project at least
/// `min_exceedances` at every grid point before the full run starts.
pub fn b_empirical(spec: &ProcessSpec, alpha: f64, cfg: &BEmpiricalConfig, seeder: Seeder) -> Result<BEstimate> {
    spec.validate()?;
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0,2), got {alpha}")));
    }
    if cfg.n == 0 || cfg.p == 0 || cfg.reps == 0 {
        return Err(Error::Parameter("n, p and reps must be positive".into()));
    }
    if cfg.x_grid.is_empty() || cfg.x_grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Parameter("x_grid must be a nonempty set of positive reals".into()));
    }
    let m = (cfg.n as u64)
        .checked_mul(cfg.p as u64)
        .ok_or_else(|| Error::Parameter("n * p overflows".into()))?;
    let a_np = spec
        .normalizing_sequence(cfg.calibration_draws, seeder.tagged("calibration"))?
        .at(m)?;
    let thresholds: Vec<f64> = cfg.x_grid.iter().map(|x| a_np * a_np * x).collect();

    let rows = seeder.tagged("rows");
    let row_sum = |r: usize| -> Result<f64> {
        let path = simulate_path(spec, cfg.n, &mut rows.index(r as u64).rng())?;
        Ok(dot2(path.iter().copied(), path.iter().copied()))
    };
    let count = |sums: &[f64]| -> Vec<u64> {
        thresholds
            .iter()
            .map(|t| sums.iter().filter(|&&s| s > *t).count() as u64)
            .collect()
    };

    let pilot_reps = (cfg.reps / 10).max(1);
    let pilot: Vec<f64> = (0..pilot_reps).into_par_iter().map(row_sum).collect::<Result<_>>()?;
    let pilot_counts = count(&pilot);
    let scale = cfg.reps as f64 / pilot_reps as f64;
    if pilot_counts.iter().any(|&c| (c as f64) * scale < cfg.min_exceedances as f64) {
        return Err(Error::InsufficientExceedances {
            pilot_counts,
            pilot_reps,
            required: cfg.min_exceedances,
        });
    }
    let rest: Vec<f64> =
        (pilot_reps..cfg.reps).into_par_iter().map(row_sum).collect::<Result<_>>()?;
    let sums: Vec<f64> = pilot.into_iter().chain(rest).collect();
    let counts = count(&sums);

    let reps = cfg.reps as f64;
    let coef: Vec<f64> = cfg.x_grid.iter().map(|x| x.powf(alpha / 2.0) * cfg.p as f64).collect();
    let frac: Vec<f64> = counts.iter().map(|&c| c as f64 / reps).collect();
    let points: Vec<BPoint> = cfg
        .x_grid
        .iter()
        .zip(&coef)
        .zip(&frac)
        .zip(&counts)
        .map(|(((&x, &c), &f), &k)| BPoint {
            x,
            b: c * f,
            std_error: c * (f * (1.0 - f) / reps).sqrt(),
            exceedances: k,
        })
        .collect();
    if points.iter().any(|pt| pt.std_error == 0.0) {
        return Err(Error::Estimation(format!(
            "degenerate exceedance counts {counts:?} over {} rows",
            cfg.reps
        )));
    }

    let weights: Vec<f64> = points.iter().map(|pt| pt.std_error.powi(-2)).collect();
    let total: f64 = weights.iter().sum();
    let pooled = weights.iter().zip(&points).map(|(w, pt)| w * pt.b).sum::<f64>() / total;
    // Exceedance events are nested, so Cov(f_i, f_j) = (min(f_i, f_j) - f_i f_j) / R.
    let mut var = 0.0;
    for i in 0..points.len() {
        for j in 0..points.len() {
            let cov = (frac[i].min(frac[j]) - frac[i] * frac[j]) / reps;
            var += weights[i] * weights[j] * coef[i] * coef[j] * cov;
        }
    }
    Ok(BEstimate {
        normalizer: a_np,
        points,
        pooled,
        pooled_std_error: var.sqrt() / total,
        reps: cfg.reps,
    })
}
