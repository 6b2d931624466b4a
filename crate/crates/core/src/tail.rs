//! Regularly varying marginals: the two-sided Pareto family, its
//! normalizing sequence, and the Hill tail-index estimator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

/// Two-sided Pareto law with `P(X > x) = q (x/scale)^-alpha` and
/// `P(X < -x) = (1-q) (x/scale)^-alpha` for `x >= scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailLaw {
    pub alpha: f64,
    #[serde(default = "default_balance")]
    pub q: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_balance() -> f64 {
    0.5
}

fn default_scale() -> f64 {
    1.0
}

impl TailLaw {
    pub fn new(alpha: f64, q: f64, scale: f64) -> Result<Self> {
        let law = Self { alpha, q, scale };
        law.validate()?;
        Ok(law)
    }

    /// Symmetric law with unit scale.
    pub fn symmetric(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.5, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::Parameter(format!(
                "tail index alpha must lie in (0,2), got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::Parameter(format!(
                "tail balance q must lie in [0,1], got {}",
                self.q
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Parameter(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    /// One draw. The law is assumed valid.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // 1 - U lies in (0, 1], so the magnitude is finite and >= scale.
        let u: f64 = 1.0 - rng.random::<f64>();
        let magnitude = self.scale * u.powf(-1.0 / self.alpha);
        if rng.random::<f64>() < self.q {
            magnitude
        } else {
            -magnitude
        }
    }

    /// `P(|X| > x)`.
    pub fn abs_survival(&self, x: f64) -> f64 {
        if x < self.scale {
            1.0
        } else {
            (x / self.scale).powf(-self.alpha)
        }
    }
}

pub fn sample_tail<R: Rng + ?Sized>(law: &TailLaw, count: usize, rng: &mut R) -> Result<Vec<f64>> {
    law.validate()?;
    if count == 0 {
        return Err(Error::Parameter("count must be at least 1".into()));
    }
    Ok((0..count).map(|_| law.draw(rng)).collect())
}

/// `a_m = scale * m^(1/alpha)`, the exact solution of `m P(|X| > a_m) = 1`.
pub fn normalizing_sequence(law: &TailLaw, m: u64) -> Result<f64> {
    law.validate()?;
    if m == 0 {
        return Err(Error::Parameter("normalizing index m must be at least 1".into()));
    }
    Ok(law.scale * (m as f64).powf(1.0 / law.alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizerMode {
    Analytic,
    EmpiricalQuantile,
}

pub const DEFAULT_CALIBRATION_DRAWS: usize = 1_000_000;

/// The sequence `(a_m)`, either in closed form or as the `(1 - 1/m)`
/// quantile of a calibration sample of `|X|`.
#[derive(Debug, Clone)]
pub enum NormalizingSequence {
    Analytic(TailLaw),
    EmpiricalQuantile { sorted_abs: Vec<f64> },
}

impl NormalizingSequence {
    pub fn analytic(law: TailLaw) -> Result<Self> {
        law.validate()?;
        Ok(Self::Analytic(law))
    }

    /// Builds the empirical mode from arbitrary draws of `X` (signs ignored).
    pub fn from_draws(draws: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut sorted_abs: Vec<f64> = draws.into_iter().map(f64::abs).collect();
        if sorted_abs.is_empty() {
            return Err(Error::Parameter("calibration sample is empty".into()));
        }
        if sorted_abs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("calibration sample has non-finite values".into()));
        }
        sorted_abs.sort_by(f64::total_cmp);
        Ok(Self::EmpiricalQuantile { sorted_abs })
    }

    pub fn calibrate<R: Rng + ?Sized>(law: &TailLaw, draws: usize, rng: &mut R) -> Result<Self> {
        Self::from_draws(sample_tail(law, draws, rng)?)
    }

    pub fn mode(&self) -> NormalizerMode {
        match self {
            Self::Analytic(_) => NormalizerMode::Analytic,
            Self::EmpiricalQuantile { .. } => NormalizerMode::EmpiricalQuantile,
        }
    }

    pub fn at(&self, m: u64) -> Result<f64> {
        match self {
            Self::Analytic(law) => normalizing_sequence(law, m),
            Self::EmpiricalQuantile { sorted_abs } => {
                if m == 0 {
                    return Err(Error::Parameter("normalizing index m must be at least 1".into()));
                }
                Ok(quantile_sorted(sorted_abs, 1.0 - 1.0 / m as f64))
            }
        }
    }
}

/// `floor(n^0.6)`, kept inside `[1, n-1]`.
pub fn default_hill_k(n: usize) -> usize {
    let k = (n as f64).powf(0.6).floor() as usize;
    k.clamp(1, n.saturating_sub(1).max(1))
}

/// Hill estimator of the tail index from the `k` largest values of `|data|`.
pub fn hill_estimate(data: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k >= data.len() {
        return Err(Error::Parameter(format!(
            "hill k must satisfy 1 <= k < {}, got {k}",
            data.len()
        )));
    }
    let mut abs: Vec<f64> = data.iter().map(|v| v.abs()).collect();
    if abs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("hill input has non-finite values".into()));
    }
    // Only the top k+1 order statistics matter.
    let pivot = abs.len() - k - 1;
    abs.select_nth_unstable_by(pivot, f64::total_cmp);
    let threshold = abs[pivot];
    if threshold <= 0.0 {
        return Err(Error::Estimation(
            "(k+1)-th largest |x| is zero; hill estimator undefined".into(),
        ));
    }
    let mean_log_excess =
        abs[pivot + 1..].iter().map(|v| (v / threshold).ln()).sum::<f64>() / k as f64;
    if mean_log_excess <= 0.0 {
        return Err(Error::Estimation(
            "upper order statistics are tied; zero log spacing".into(),
        ));
    }
    Ok(1.0 / mean_log_excess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::Seeder;

    fn rng(seed: u64) -> crate::seed::StreamRng {
        Seeder::new(seed).rng()
    }

    #[test]
    fn rejects_invalid_laws() {
        assert!(TailLaw::new(2.0, 0.5, 1.0).is_err());
        assert!(TailLaw::new(0.0, 0.5, 1.0).is_err());
        assert!(TailLaw::new(1.0, 1.5, 1.0).is_err());
        assert!(TailLaw::new(1.0, 0.5, 0.0).is_err());
        let bad = TailLaw { alpha: 3.0, q: 0.5, scale: 1.0 };
        assert!(matches!(sample_tail(&bad, 10, &mut rng(1)), Err(Error::Parameter(_))));
        let good = TailLaw::symmetric(1.0).unwrap();
        assert!(sample_tail(&good, 0, &mut rng(1)).is_err());
    }

    #[test]
    fn pareto_survival_at_two() {
        let law = TailLaw::new(1.0, 1.0, 1.0).unwrap();
        let x = sample_tail(&law, 100_000, &mut rng(11)).unwrap();
        let frac = x.iter().filter(|&&v| v > 2.0).count() as f64 / x.len() as f64;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
        assert!(x.iter().all(|&v| v >= 1.0));
    }

    #[test]
    fn balanced_signs() {
        let law = TailLaw::new(0.5, 0.5, 1.0).unwrap();
        let x = sample_tail(&law, 100_000, &mut rng(12)).unwrap();
        let neg = x.iter().filter(|&&v| v < 0.0).count() as f64 / x.len() as f64;
        assert!((neg - 0.5).abs() < 0.01, "{neg}");
    }

    #[test]
    fn survival_within_binomial_band() {
        let law = TailLaw::new(1.3, 0.3, 2.0).unwrap();
        let n = 100_000;
        let x = sample_tail(&law, n, &mut rng(13)).unwrap();
        for &t in &[2.0, 3.0, 5.0, 10.0, 30.0] {
            let p = law.abs_survival(t);
            let emp = x.iter().filter(|v| v.abs() > t).count() as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((emp - p).abs() <= 3.0 * se + 1e-12, "x={t} emp={emp} p={p}");
            let pos = x.iter().filter(|&&v| v > t).count() as f64 / n as f64;
            let pp = law.q * p;
            let se = (pp * (1.0 - pp) / n as f64).sqrt();
            assert!((pos - pp).abs() <= 3.0 * se, "x={t} pos={pos} pp={pp}");
        }
    }

    #[test]
    fn hill_on_exact_pareto_1_5() {
        let law = TailLaw::new(1.5, 1.0, 1.0).unwrap();
        let x = sample_tail(&law, 1_000_000, &mut rng(14)).unwrap();
        let est = hill_estimate(&x, default_hill_k(x.len())).unwrap();
        assert!((1.45..=1.55).contains(&est), "{est}");
    }

    #[test]
    fn hill_fixed_k_fixtures() {
        for (alpha, lo, hi, seed) in [(1.0, 0.93, 1.07, 15), (0.5, 0.46, 0.54, 16)] {
            let law = TailLaw::symmetric(alpha).unwrap();
            let x = sample_tail(&law, 100_000, &mut rng(seed)).unwrap();
            let est = hill_estimate(&x, 1000).unwrap();
            assert!((lo..=hi).contains(&est), "alpha={alpha} est={est}");
        }
    }

    #[test]
    fn hill_rejects_degenerate_input() {
        assert!(matches!(hill_estimate(&[3.0; 50], 10), Err(Error::Estimation(_))));
        assert!(matches!(hill_estimate(&[0.0; 50], 10), Err(Error::Estimation(_))));
        assert!(matches!(hill_estimate(&[1.0, 2.0], 2), Err(Error::Parameter(_))));
        assert!(matches!(hill_estimate(&[1.0, 2.0], 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn hill_within_ten_percent_in_95_of_100_reps() {
        let law = TailLaw::symmetric(1.2).unwrap();
        let n = 100_000;
        let k = default_hill_k(n);
        let root = Seeder::new(99);
        let hits = (0..100u64)
            .filter(|&r| {
                let x = sample_tail(&law, n, &mut root.index(r).rng()).unwrap();
                let est = hill_estimate(&x, k).unwrap();
                (est - 1.2).abs() <= 0.12
            })
            .count();
        assert!(hits >= 95, "{hits}/100");
    }

    #[test]
    fn analytic_normalizer_values() {
        let a = normalizing_sequence(&TailLaw::symmetric(1.0).unwrap(), 100).unwrap();
        assert!((a - 100.0).abs() <= 1e-12 * 100.0);
        let a = normalizing_sequence(&TailLaw::symmetric(0.5).unwrap(), 100).unwrap();
        assert!((a - 10_000.0).abs() <= 1e-12 * 10_000.0);
        let law = TailLaw::new(1.9, 0.5, 2.0).unwrap();
        let a = normalizing_sequence(&law, 10).unwrap();
        let expected = 2.0 * 10f64.powf(1.0 / 1.9);
        assert!((a - expected).abs() <= 1e-12 * expected);
        assert!((a - 6.7196).abs() < 1e-4);
        assert!(normalizing_sequence(&law, 0).is_err());
    }

    #[test]
    fn empirical_normalizer_tracks_analytic() {
        for (alpha, seed) in [(0.5, 21), (1.0, 22), (1.7, 23)] {
            let law = TailLaw::symmetric(alpha).unwrap();
            let emp =
                NormalizingSequence::calibrate(&law, DEFAULT_CALIBRATION_DRAWS, &mut rng(seed))
                    .unwrap();
            assert_eq!(emp.mode(), NormalizerMode::EmpiricalQuantile);
            let exact = NormalizingSequence::analytic(law).unwrap();
            for m in [10, 100] {
                let (e, a) = (emp.at(m).unwrap(), exact.at(m).unwrap());
                assert!((e / a - 1.0).abs() <= 0.05, "alpha={alpha} m={m} {e} vs {a}");
            }
            let mut prev = 0.0;
            for m in 1..200 {
                let v = emp.at(m).unwrap();
                assert!(v >= prev);
                prev = v;
            }
        }
    }
}
