//! Tail index of a stationary GARCH(1,1) process with Gaussian noise: the
//! positive root of `h(alpha) = E[(a1 Z^2 + b1)^alpha] = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::HermiteRule;

pub const DEFAULT_NODES: usize = 256;
pub const MIN_NODES: usize = 32;
/// Relative gap between the n- and 2n-node rules that we aim for.
pub const TARGET_REL_GAP: f64 = 1e-8;
/// Relative gap beyond which an evaluation is refused.
pub const MAX_REL_GAP: f64 = 1e-6;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `h(alpha) = E[(a1 Z^2 + b1)^alpha]` for standard normal `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentFunction {
    pub a1: f64,
    pub b1: f64,
    pub quadrature_nodes: usize,
}

impl MomentFunction {
    pub fn new(a1: f64, b1: f64) -> Result<Self> {
        Self::with_nodes(a1, b1, DEFAULT_NODES)
    }

    pub fn with_nodes(a1: f64, b1: f64, quadrature_nodes: usize) -> Result<Self> {
        let f = Self { a1, b1, quadrature_nodes };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a1 > 0.0 && self.a1.is_finite()) {
            return Err(Error::Parameter(format!("a1 must be positive, got {}", self.a1)));
        }
        if !(self.b1 >= 0.0 && self.b1.is_finite()) {
            return Err(Error::Parameter(format!("b1 must be nonnegative, got {}", self.b1)));
        }
        if self.quadrature_nodes < MIN_NODES {
            return Err(Error::Parameter(format!(
                "need at least {MIN_NODES} quadrature nodes, got {}",
                self.quadrature_nodes
            )));
        }
        Ok(())
    }

    /// Evaluates `E g(Z)` on the n- and 2n-node rules and returns the finer
    /// value, refusing when the two disagree beyond `MAX_REL_GAP` (relative
    /// to `max(1, |value|)`).
    fn checked_expectation(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let coarse = HermiteRule::cached(self.quadrature_nodes).expect_normal(&g);
        let fine = HermiteRule::cached(2 * self.quadrature_nodes).expect_normal(&g);
        if !fine.is_finite() {
            return Err(Error::Numeric("quadrature produced a non-finite value".into()));
        }
        let gap = (coarse - fine).abs() / fine.abs().max(1.0);
        if gap > MAX_REL_GAP {
            return Err(Error::Precision {
                nodes: self.quadrature_nodes,
                relative_gap: gap,
                tolerance: MAX_REL_GAP,
            });
        }
        if gap > TARGET_REL_GAP {
            log::warn!(
                "h quadrature gap {gap:e} above target at {} nodes (a1={}, b1={})",
                self.quadrature_nodes,
                self.a1,
                self.b1
            );
        }
        Ok(fine)
    }

    /// `E log(a1 Z^2 + b1)`; negative iff GARCH(1,1) is strictly stationary.
    pub fn log_moment(&self) -> Result<f64> {
        self.validate()?;
        if self.b1 == 0.0 {
            return Ok(self.a1.ln() - EULER_GAMMA - std::f64::consts::LN_2);
        }
        let (a1, b1) = (self.a1, self.b1);
        self.checked_expectation(|z| (a1 * z * z + b1).ln())
    }
}

/// Closed form of `E|Z|^(2 alpha) = 2^alpha Gamma(alpha + 1/2) / sqrt(pi)`.
fn abs_normal_moment(two_alpha: f64) -> f64 {
    let alpha = two_alpha / 2.0;
    (alpha * std::f64::consts::LN_2 + libm::lgamma(alpha + 0.5)
        - 0.5 * std::f64::consts::PI.ln())
    .exp()
}

pub fn moment_h(f: &MomentFunction, alpha: f64) -> Result<f64> {
    f.validate()?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Parameter(format!("alpha must be >= 0, got {alpha}")));
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    if f.b1 == 0.0 {
        // |z|^(2 alpha) has a kink at zero; use the exact moment instead.
        return Ok(f.a1.powf(alpha) * abs_normal_moment(2.0 * alpha));
    }
    let (a1, b1) = (f.a1, f.b1);
    f.checked_expectation(|z| (a1 * z * z + b1).powf(alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target for `|h(alpha*) - 1|`.
    pub tol: f64,
    /// Bracket width the root is bisected down to.
    pub width: f64,
    /// Largest tail index searched before giving up.
    pub alpha_max: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, width: 1e-8, alpha_max: 50.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailIndexSolution {
    pub alpha: f64,
    pub h_at_alpha: f64,
    /// `E log(a1 Z^2 + b1)` by quadrature.
    pub stationarity_margin: f64,
    pub quadrature_nodes: usize,
    pub evaluations: usize,
}

/// Solves `h(alpha) = 1` for `alpha > 0` with default bracket settings.
pub fn solve_tail_index(f: &MomentFunction, tol: f64) -> Result<TailIndexSolution> {
    solve_tail_index_with(f, &SolverOptions { tol, ..SolverOptions::default() })
}

/// `h` is convex with `h(0) = 1` and `h'(0) = E log(a1 Z^2 + b1) < 0` under
/// stationarity, so `{h < 1} = (0, alpha*)`. Since `h(1) = a1 + b1`, the
/// side of 1 on which the root lies is known before any search.
pub fn solve_tail_index_with(f: &MomentFunction, opts: &SolverOptions) -> Result<TailIndexSolution> {
    f.validate()?;
    if !(opts.tol > 0.0 && opts.width > 0.0 && opts.alpha_max > 1.0) {
        return Err(Error::Parameter("solver needs tol > 0, width > 0, alpha_max > 1".into()));
    }
    let margin = f.log_moment()?;
    if margin >= 0.0 {
        return Err(Error::Domain(format!(
            "E log(a1 Z^2 + b1) = {margin:.6} >= 0: no strictly stationary solution"
        )));
    }
    let mut evaluations = 0usize;
    let mut h = |alpha: f64| {
        evaluations += 1;
        moment_h(f, alpha)
    };
    let done = |alpha: f64, value: f64, evaluations: usize| TailIndexSolution {
        alpha,
        h_at_alpha: value,
        stationarity_margin: margin,
        quadrature_nodes: f.quadrature_nodes,
        evaluations,
    };

    let h1 = h(1.0)?;
    if (h1 - 1.0).abs() <= opts.tol {
        return Ok(done(1.0, h1, 1));
    }
    let (mut lo, mut hi) = if h1 < 1.0 {
        let (mut lo, mut hi) = (1.0, 2.0f64);
        loop {
            if h(hi)? > 1.0 {
                break (lo, hi);
            }
            if hi >= opts.alpha_max {
                return Err(Error::NoRoot { alpha_max: opts.alpha_max });
            }
            lo = hi;
            hi = (2.0 * hi).min(opts.alpha_max);
        }
    } else {
        let (mut lo, mut hi) = (0.5, 1.0);
        while h(lo)? >= 1.0 {
            hi = lo;
            lo /= 2.0;
            if lo < 1e-12 {
                return Err(Error::Numeric("could not bracket root near zero".into()));
            }
        }
        (lo, hi)
    };

    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            let value = h(mid)?;
            if (value - 1.0).abs() <= opts.tol {
                return Ok(done(mid, value, evaluations));
            }
            return Err(Error::Numeric(format!(
                "bracket exhausted at alpha={mid} with |h-1|={:e}",
                (value - 1.0).abs()
            )));
        }
        let value = h(mid)?;
        if (hi - lo) <= opts.width && (value - 1.0).abs() <= opts.tol {
            return Ok(done(mid, value, evaluations));
        }
        if value < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
