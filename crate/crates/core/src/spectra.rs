//! Observation matrices built from independent row paths and the top of the
//! spectrum of `X X^T`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::{simulate_path, ProcessSpec};
use crate::seed::Seeder;

/// Eigenvalues below `-CLIP_WARN * lambda_max` are reported before being
/// clipped to zero.
pub const CLIP_WARN: f64 = 1e-10;

/// `p x n` data matrix, row-major; row `i` is one path of the process.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    p: usize,
    n: usize,
    entries: Vec<f64>,
}

impl ObservationMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if p == 0 || n == 0 {
            return Err(Error::Parameter("matrix needs p >= 1 and n >= 1".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Parameter("rows have unequal lengths".into()));
        }
        Ok(Self { p, n, entries: rows.concat() })
    }

    pub fn from_row_major(p: usize, n: usize, entries: Vec<f64>) -> Result<Self> {
        if p == 0 || n == 0 || entries.len() != p * n {
            return Err(Error::Parameter(format!(
                "expected {p}x{n} entries, got {}",
                entries.len()
            )));
        }
        Ok(Self { p, n, entries })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.n)
    }

    fn check_finite(&self) -> Result<()> {
        if self.entries.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Numeric("observation matrix has non-finite entries".into()))
        }
    }

    /// Row sums of squares, i.e. the diagonal of `X X^T`.
    pub fn row_sums_of_squares(&self) -> Vec<f64> {
        self.rows().map(|r| dot2(r.iter().copied(), r.iter().copied())).collect()
    }

    pub fn max_entry_sq(&self) -> f64 {
        self.entries.iter().map(|v| v * v).fold(0.0, f64::max)
    }

    /// `sum_it X_it^2` with compensated accumulation.
    pub fn sum_of_squares(&self) -> f64 {
        dot2(self.entries.iter().copied(), self.entries.iter().copied())
    }

    /// The smaller of `X X^T` (p x p) and `X^T X` (n x n).
    pub fn small_gram(&self) -> DMatrix<f64> {
        if self.p <= self.n {
            self.row_gram()
        } else {
            self.column_gram()
        }
    }

    /// `X X^T`.
    pub fn row_gram(&self) -> DMatrix<f64> {
        let p = self.p;
        let mut g = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..=i {
                let v = dot2(self.row(i).iter().copied(), self.row(j).iter().copied());
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// `X^T X`.
    pub fn column_gram(&self) -> DMatrix<f64> {
        let (p, n) = (self.p, self.n);
        let col = |t: usize| (0..p).map(move |i| self.entries[i * n + t]);
        let mut g = DMatrix::zeros(n, n);
        for s in 0..n {
            for t in 0..=s {
                let v = dot2(col(s), col(t));
                g[(s, t)] = v;
                g[(t, s)] = v;
            }
        }
        g
    }
}

/// Compensated dot product (Ogita–Rump–Oishi `Dot2`): each product's
/// rounding error is recovered with an FMA and each addition's with
/// TwoSum, giving roughly twice the working precision.
pub fn dot2(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (x, y) in a.zip(b) {
        let prod = x * y;
        let prod_err = x.mul_add(y, -prod);
        let t = sum + prod;
        let z = t - sum;
        let add_err = (sum - (t - z)) + (prod - z);
        sum = t;
        comp += prod_err + add_err;
    }
    sum + comp
}

/// Builds a `p x n` matrix whose row `i` is a path drawn from
/// `seeder.index(i)`, so rows are independent and reproducible in any order.
pub fn build_matrix(spec: &ProcessSpec, p: usize, n: usize, seeder: Seeder) -> Result<ObservationMatrix> {
    if p == 0 || n == 0 {
        return Err(Error::Parameter("matrix needs p >= 1 and n >= 1".into()));
    }
    spec.validate()?;
    let rows: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|i| simulate_path(spec, n, &mut seeder.index(i as u64).rng()))
        .collect::<Result<_>>()?;
    ObservationMatrix::from_rows(rows)
}

/// Leading eigenvalues of `X X^T`, optionally scaled by `a_np^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Nonincreasing, nonnegative.
    pub eigenvalues: Vec<f64>,
    pub normalizer: f64,
    pub normalized: Vec<f64>,
    /// Sum of all `min(p, n)` eigenvalues before truncation.
    pub trace: f64,
    /// Most negative raw eigenvalue that was clipped to zero (0 if none).
    pub clipped: f64,
}

impl SpectrumResult {
    pub fn with_normalizer(mut self, normalizer: f64) -> Self {
        self.normalizer = normalizer;
        self.normalized = self.eigenvalues.iter().map(|l| l / normalizer).collect();
        self
    }
}

/// Eigenvalues of a symmetric positive semidefinite matrix, descending,
/// with negative rounding noise clipped to zero.
fn psd_eigenvalues(gram: DMatrix<f64>) -> Result<(Vec<f64>, f64)> {
    let mut values: Vec<f64> = gram.symmetric_eigenvalues().iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("eigensolver returned non-finite values".into()));
    }
    values.sort_by(|a, b| b.total_cmp(a));
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let mut clipped = 0.0f64;
    for v in values.iter_mut().filter(|v| **v < 0.0) {
        if *v < -CLIP_WARN * top {
            log::warn!("clipping eigenvalue {v:e} (lambda_max {top:e})");
        }
        clipped = clipped.min(*v);
        *v = 0.0;
    }
    Ok((values, clipped))
}

pub fn top_eigenvalues(m: &ObservationMatrix, k: usize) -> Result<SpectrumResult> {
    let r = m.p.min(m.n);
    if k == 0 || k > r {
        return Err(Error::Parameter(format!("k must lie in [1, {r}], got {k}")));
    }
    m.check_finite()?;
    let (mut values, clipped) = psd_eigenvalues(m.small_gram())?;
    let trace = values.iter().sum();
    values.truncate(k);
    Ok(SpectrumResult {
        normalized: values.clone(),
        eigenvalues: values,
        normalizer: 1.0,
        trace,
        clipped,
    })
}

/// Top eigenvalues next to the top diagonal entries of `X X^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalComparison {
    pub eigenvalues: Vec<f64>,
    /// Largest `k` row sums of squares, nonincreasing.
    pub row_sums: Vec<f64>,
    pub max_entry_sq: f64,
}

impl DiagonalComparison {
    /// `lambda_(1) / D_(1)`.
    pub fn ratio_max_diag(&self) -> f64 {
        self.eigenvalues[0] / self.row_sums[0]
    }

    /// `lambda_(1) / max_it X_it^2`.
    pub fn ratio_max_entry(&self) -> f64 {
        self.eigenvalues[0] / self.max_entry_sq
    }
}

pub fn diagonal_comparison(m: &ObservationMatrix, k: usize) -> Result<DiagonalComparison> {
    let spectrum = top_eigenvalues(m, k)?;
    let mut row_sums = m.row_sums_of_squares();
    row_sums.sort_by(|a, b| b.total_cmp(a));
    row_sums.truncate(k);
    Ok(DiagonalComparison {
        eigenvalues: spectrum.eigenvalues,
        row_sums,
        max_entry_sq: m.max_entry_sq(),
    })
}
