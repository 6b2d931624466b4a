//! Stationary heavy-tailed row processes: iid Pareto, stochastic volatility
//! and GARCH(p,q), plus the stationarity and extremal-index diagnostics.

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Seeder;
use crate::stats::{mean_and_se, quantile_sorted};
use crate::tail::{NormalizingSequence, TailLaw};

pub const DEFAULT_GARCH_BURN_IN: usize = 1000;

/// Volatility sequence of a stochastic volatility model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VolSpec {
    /// `sigma_t = (eta_t + ... + eta_{t-m}) / (m+1)` with `eta` iid
    /// lognormal(`mu`, `tau`).
    MDependent { m: usize, mu: f64, tau: f64 },
    /// `log sigma_t = sum_k psi_k xi_{t-k}` with `xi` iid `N(0, xi_std^2)`.
    ExpGaussianLinear { psi: Vec<f64>, xi_std: f64 },
}

impl VolSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            VolSpec::MDependent { mu, tau, .. } => {
                if !mu.is_finite() || !(*tau > 0.0 && tau.is_finite()) {
                    return Err(Error::Parameter(format!(
                        "m-dependent volatility needs finite mu and tau > 0, got mu={mu} tau={tau}"
                    )));
                }
            }
            VolSpec::ExpGaussianLinear { psi, xi_std } => {
                if psi.iter().any(|v| !v.is_finite()) || psi.iter().all(|&v| v == 0.0) {
                    return Err(Error::Parameter(
                        "psi must be finite with at least one nonzero coefficient".into(),
                    ));
                }
                if !(*xi_std > 0.0 && xi_std.is_finite()) {
                    return Err(Error::Parameter(format!("xi_std must be positive, got {xi_std}")));
                }
            }
        }
        Ok(())
    }

    /// Standard deviation of `log sigma_0` for the exp-Gaussian variant.
    pub fn log_sigma_std(&self) -> Option<f64> {
        match self {
            VolSpec::ExpGaussianLinear { psi, xi_std } => {
                Some(xi_std * psi.iter().map(|v| v * v).sum::<f64>().sqrt())
            }
            VolSpec::MDependent { .. } => None,
        }
    }

    fn path<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<f64> {
        match self {
            VolSpec::MDependent { m, mu, tau } => {
                let eta = LogNormal::new(*mu, *tau).expect("validated");
                let raw: Vec<f64> = (0..len + m).map(|_| eta.sample(rng)).collect();
                let width = (*m + 1) as f64;
                raw.windows(m + 1).map(|w| w.iter().sum::<f64>() / width).collect()
            }
            VolSpec::ExpGaussianLinear { psi, xi_std } => {
                let xi = Normal::new(0.0, *xi_std).expect("validated");
                let lag = psi.len() - 1;
                let noise: Vec<f64> = (0..len + lag).map(|_| xi.sample(rng)).collect();
                (0..len)
                    .map(|t| {
                        // noise[t + lag - k] plays the role of xi_{t-k}
                        let log_sigma: f64 =
                            psi.iter().enumerate().map(|(k, c)| c * noise[t + lag - k]).sum();
                        log_sigma.exp()
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GarchNoise {
    /// Standard normal innovations.
    #[default]
    Gaussian,
}

/// `sigma_t^2 = a0 + sum_i a[i-1] X_{t-i}^2 + sum_j b[j-1] sigma_{t-j}^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchSpec {
    pub a0: f64,
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default)]
    pub noise: GarchNoise,
}

impl GarchSpec {
    pub fn new(a0: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let spec = Self { a0, a, b, noise: GarchNoise::Gaussian };
        spec.validate()?;
        Ok(spec)
    }

    pub fn garch11(a0: f64, a1: f64, b1: f64) -> Result<Self> {
        Self::new(a0, vec![a1], vec![b1])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a0 > 0.0 && self.a0.is_finite()) {
            return Err(Error::Parameter(format!("garch a0 must be positive, got {}", self.a0)));
        }
        if self.a.is_empty() && self.b.is_empty() {
            return Err(Error::Parameter("garch needs p >= 1 or q >= 1".into()));
        }
        for (name, coef) in [("a", &self.a), ("b", &self.b)] {
            if coef.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
                return Err(Error::Parameter(format!("garch {name} coefficients must be >= 0")));
            }
            if let Some(&last) = coef.last() {
                if last <= 0.0 {
                    return Err(Error::Parameter(format!(
                        "trailing garch {name} coefficient must be > 0"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `(a1, b1)` when the model is GARCH(1,1) (or a sub-case with a missing
    /// lag), `None` otherwise.
    pub fn order_one(&self) -> Option<(f64, f64)> {
        if self.a.len() <= 1 && self.b.len() <= 1 {
            Some((
                self.a.first().copied().unwrap_or(0.0),
                self.b.first().copied().unwrap_or(0.0),
            ))
        } else {
            None
        }
    }

    pub fn persistence(&self) -> f64 {
        self.a.iter().sum::<f64>() + self.b.iter().sum::<f64>()
    }

    /// Starting value for `sigma^2`: the unconditional variance when finite.
    pub fn initial_variance(&self) -> f64 {
        let s = self.persistence();
        if s < 1.0 {
            self.a0 / (1.0 - s)
        } else {
            self.a0
        }
    }

    fn path<R: Rng + ?Sized>(&self, burn_in: usize, n: usize, rng: &mut R) -> Vec<f64> {
        let (p, q) = (self.a.len(), self.b.len());
        let init = self.initial_variance();
        // Ring buffers of the most recent X^2 and sigma^2, newest first.
        let mut x2 = vec![init; p];
        let mut s2 = vec![init; q];
        let mut out = Vec::with_capacity(n);
        for t in 0..burn_in + n {
            let var = self.a0
                + self.a.iter().zip(&x2).map(|(c, v)| c * v).sum::<f64>()
                + self.b.iter().zip(&s2).map(|(c, v)| c * v).sum::<f64>();
            let z: f64 = StandardNormal.sample(rng);
            let x = var.sqrt() * z;
            if p > 0 {
                x2.rotate_right(1);
                x2[0] = x * x;
            }
            if q > 0 {
                s2.rotate_right(1);
                s2[0] = var;
            }
            if t >= burn_in {
                out.push(x);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessKind {
    Iid(TailLaw),
    Sv { z: TailLaw, vol: VolSpec },
    Garch(GarchSpec),
}

/// A stationary row process plus the number of warm-up steps to discard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(flatten)]
    pub kind: ProcessKind,
    /// Defaults to 0 for iid/SV and [`DEFAULT_GARCH_BURN_IN`] for GARCH.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
}

impl ProcessSpec {
    pub fn iid(law: TailLaw) -> Self {
        Self { kind: ProcessKind::Iid(law), burn_in: None }
    }

    pub fn sv(z: TailLaw, vol: VolSpec) -> Self {
        Self { kind: ProcessKind::Sv { z, vol }, burn_in: None }
    }

    pub fn garch(spec: GarchSpec) -> Self {
        Self { kind: ProcessKind::Garch(spec), burn_in: None }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = Some(burn_in);
        self
    }

    pub fn burn_in(&self) -> usize {
        match (&self.kind, self.burn_in) {
            (_, Some(b)) => b,
            (ProcessKind::Garch(_), None) => DEFAULT_GARCH_BURN_IN,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ProcessKind::Iid(law) => law.validate(),
            ProcessKind::Sv { z, vol } => {
                z.validate()?;
                vol.validate()
            }
            ProcessKind::Garch(g) => {
                g.validate()?;
                if self.burn_in() == 0 {
                    return Err(Error::Parameter("garch burn_in must be at least 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Tail index when it is a model parameter (iid and SV).
    pub fn declared_alpha(&self) -> Option<f64> {
        match &self.kind {
            ProcessKind::Iid(law) | ProcessKind::Sv { z: law, .. } => Some(law.alpha),
            ProcessKind::Garch(_) => None,
        }
    }

    /// Normalizing sequence used for `a_np`: the noise law's closed form for
    /// iid and SV rows, an empirical quantile of `|X|` for GARCH.
    pub fn normalizing_sequence(
        &self,
        calibration_draws: usize,
        seeder: Seeder,
    ) -> Result<NormalizingSequence> {
        match &self.kind {
            ProcessKind::Iid(law) | ProcessKind::Sv { z: law, .. } => {
                NormalizingSequence::analytic(*law)
            }
            ProcessKind::Garch(_) => {
                NormalizingSequence::from_draws(self.calibration_draws(calibration_draws, seeder)?)
            }
        }
    }

    /// `count` marginal draws, concatenated from independent paths of at
    /// most [`CALIBRATION_CHUNK`] values each.
    pub fn calibration_draws(&self, count: usize, seeder: Seeder) -> Result<Vec<f64>> {
        self.validate()?;
        let chunks = count.div_ceil(CALIBRATION_CHUNK);
        let parts: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let len = CALIBRATION_CHUNK.min(count - c * CALIBRATION_CHUNK);
                simulate_path(self, len, &mut seeder.index(c as u64).rng())
            })
            .collect::<Result<_>>()?;
        Ok(parts.concat())
    }
}

pub const CALIBRATION_CHUNK: usize = 10_000;

pub fn simulate_path<R: Rng + ?Sized>(spec: &ProcessSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Parameter("path length n must be at least 1".into()));
    }
    let burn = spec.burn_in();
    let path = match &spec.kind {
        ProcessKind::Iid(law) => {
            (0..burn + n).map(|_| law.draw(rng)).skip(burn).collect()
        }
        ProcessKind::Sv { z, vol } => {
            let sigma = vol.path(burn + n, rng);
            sigma.into_iter().map(|s| s * z.draw(rng)).skip(burn).collect()
        }
        ProcessKind::Garch(g) => g.path(burn, n, rng),
    };
    Ok(path)
}

/// Monte Carlo estimate of `E log(a1 Z^2 + b1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl MarginEstimate {
    /// Strictly stationary at 3-SE confidence.
    pub fn is_stationary(&self) -> bool {
        self.mean + 3.0 * self.std_error < 0.0
    }
}

/// Estimates the GARCH(1,1) Lyapunov exponent `E log(a1 Z^2 + b1)`; the
/// process has a unique strictly stationary solution iff it is negative.
///
/// Only the shape of `spec` is checked here, so the degenerate `a1 = 0`
/// case is answered exactly as `log b1`.
pub fn garch_stationarity_margin<R: Rng + ?Sized>(
    spec: &GarchSpec,
    samples: usize,
    rng: &mut R,
) -> Result<MarginEstimate> {
    let (a1, b1) = spec.order_one().ok_or_else(|| {
        Error::Unsupported(format!(
            "stationarity margin needs GARCH(1,1), got GARCH({},{})",
            spec.a.len(),
            spec.b.len()
        ))
    })?;
    if !(a1 >= 0.0 && b1 >= 0.0) {
        return Err(Error::Parameter("garch coefficients must be >= 0".into()));
    }
    if a1 == 0.0 {
        if b1 == 0.0 {
            return Err(Error::Domain("a1 = b1 = 0 gives E log = -infinity".into()));
        }
        return Ok(MarginEstimate { mean: b1.ln(), std_error: 0.0, samples: 0 });
    }
    if samples < 2 {
        return Err(Error::Parameter("need at least 2 Monte Carlo samples".into()));
    }
    let logs: Vec<f64> = (0..samples)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            (a1 * z * z + b1).ln()
        })
        .collect();
    let (mean, std_error) = mean_and_se(&logs);
    Ok(MarginEstimate { mean, std_error, samples })
}

/// Blocks estimator of the extremal index of `(|X_t|)`.
///
/// With `N` exceedances of the empirical `threshold_quantile` of `|data|`
/// among `k` full blocks of length `r`, `K` of which contain an exceedance,
/// returns `log(1 - K/k) / (r log(1 - N/(k r)))` clipped to `(0, 1]`. The
/// log form removes the bias of the plain ratio `K/N`, which for iid data
/// tends to `(1 - (1-u)^r) / (r u)` instead of one.
pub fn extremal_index_blocks(data: &[f64], block_len: usize, threshold_quantile: f64) -> Result<f64> {
    if block_len < 2 {
        return Err(Error::Parameter("block_len must be at least 2".into()));
    }
    if !(threshold_quantile > 0.0 && threshold_quantile < 1.0) {
        return Err(Error::Parameter("threshold_quantile must lie in (0,1)".into()));
    }
    if data.len() < 10 * block_len {
        return Err(Error::Parameter(format!(
            "need at least {} observations for block length {block_len}",
            10 * block_len
        )));
    }
    let abs: Vec<f64> = data.iter().map(|v| v.abs()).collect();
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let u = quantile_sorted(&sorted, threshold_quantile);

    let blocks = abs.len() / block_len;
    let used = blocks * block_len;
    let mut exceedances = 0usize;
    let mut hit_blocks = 0usize;
    for block in abs[..used].chunks_exact(block_len) {
        let c = block.iter().filter(|&&v| v > u).count();
        exceedances += c;
        hit_blocks += usize::from(c > 0);
    }
    if exceedances == 0 {
        return Err(Error::Estimation(format!(
            "no exceedances of the {threshold_quantile} quantile"
        )));
    }
    let theta = if hit_blocks < blocks && exceedances < used {
        let num = (1.0 - hit_blocks as f64 / blocks as f64).ln();
        let den = block_len as f64 * (1.0 - exceedances as f64 / used as f64).ln();
        num / den
    } else {
        hit_blocks as f64 / exceedances as f64
    };
    Ok(theta.clamp(f64::MIN_POSITIVE, 1.0))
}
