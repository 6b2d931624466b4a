//! Gauss–Hermite rules for expectations over a standard normal variable.
//!
//! Nodes come from the Golub–Welsch eigenproblem and are polished by Newton
//! steps on the orthonormal Hermite recurrence, which also yields the
//! weights. The recurrence is rescaled as it runs so that rules with more
//! than ~700 nodes do not overflow.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

const RESCALE_AT: f64 = 1e150;

#[derive(Debug)]
pub struct HermiteRule {
    /// Nodes for the weight `exp(-x^2)`, ascending.
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Returns `(p_n, p_{n-1}, rescale_count)` of the orthonormal recurrence,
/// where the true values are the returned ones times `RESCALE_AT^count`.
fn orthonormal(n: usize, x: f64) -> (f64, f64, i32) {
    let mut p1 = std::f64::consts::PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut count = 0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = x * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > RESCALE_AT {
            p1 /= RESCALE_AT;
            p2 /= RESCALE_AT;
            count += 1;
        }
    }
    (p1, p2, count)
}

impl HermiteRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let off = (k as f64 / 2.0).sqrt();
            jacobi[(k - 1, k)] = off;
            jacobi[(k, k - 1)] = off;
        }
        let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        nodes.sort_by(f64::total_cmp);

        let nf = n as f64;
        let mut weights = Vec::with_capacity(n);
        for x in nodes.iter_mut() {
            for _ in 0..2 {
                let (p, pm1, _) = orthonormal(n, *x);
                let dp = (2.0 * nf).sqrt() * pm1;
                let step = p / dp;
                if step.is_finite() {
                    *x -= step;
                }
            }
            let (_, pm1, count) = orthonormal(n, *x);
            let dp = (2.0 * nf).sqrt() * pm1.abs();
            let log_w = std::f64::consts::LN_2
                - 2.0 * (dp.ln() + f64::from(count) * RESCALE_AT.ln());
            weights.push(log_w.exp());
        }
        Self { nodes, weights }
    }

    /// Shared rule of size `n`, built once per process.
    pub fn cached(n: usize) -> Arc<HermiteRule> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<HermiteRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("hermite cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(HermiteRule::new(n))).clone()
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// `E f(Z)` for `Z ~ N(0,1)`.
    pub fn expect_normal(&self, f: impl Fn(f64) -> f64) -> f64 {
        let scale = std::f64::consts::SQRT_2;
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&x, &w)| w * f(scale * x))
            .sum();
        sum / std::f64::consts::PI.sqrt()
    }
}
