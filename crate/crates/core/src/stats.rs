//! Order statistics and summaries shared by the estimators.

use serde::{Deserialize, Serialize};

/// Type-7 empirical quantile (linear interpolation of order statistics).
/// `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let h = (n - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], prob: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, prob)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = mean(values);
    if values.len() < 2 {
        return (m, f64::NAN);
    }
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Location summary of a ratio that should tend to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub q05: f64,
    pub q95: f64,
    /// Median of |ratio - 1|.
    pub median_abs_gap: f64,
}

impl RatioSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let gaps: Vec<f64> = v.iter().map(|r| (r - 1.0).abs()).collect();
        Self {
            count: v.len(),
            median: quantile_sorted(&v, 0.5),
            mean: mean(&v),
            min: v[0],
            max: v[v.len() - 1],
            q05: quantile_sorted(&v, 0.05),
            q95: quantile_sorted(&v, 0.95),
            median_abs_gap: median(&gaps),
        }
    }
}
