//! Simulation and verification toolkit for the largest eigenvalues of
//! heavy-tailed sample covariance matrices `X X^T`, whose rows are
//! independent copies of a stationary regularly varying process.
//!
//! The modules build on each other in this order:
//!
//! - [`tail`]: two-sided Pareto marginals, normalizing sequences, Hill estimator
//! - [`processes`]: iid, stochastic volatility and GARCH row processes
//! - [`garch_tail`]: GARCH(1,1) tail index from `E[(a1 Z^2 + b1)^alpha] = 1`
//! - [`spectra`]: observation matrices and their top eigenvalues
//! - [`limits`]: Poisson/Fréchet limit laws and the constant `b`
//! - [`verify`]: Monte Carlo experiments comparing the two

pub mod error;
pub mod garch_tail;
mod hermite;
pub mod limits;
pub mod processes;
pub mod seed;
pub mod spectra;
pub mod stats;
pub mod tail;
pub mod verify;

pub use error::{Error, Result};
pub use garch_tail::{moment_h, solve_tail_index, MomentFunction, TailIndexSolution};
pub use limits::{
    b_empirical, b_sv_analytic, frechet_cdf, gamma_points, limit_topk_sample, BEmpiricalConfig,
    BEstimate, LimitLaw,
};
pub use processes::{
    extremal_index_blocks, garch_stationarity_margin, simulate_path, GarchSpec, ProcessKind,
    ProcessSpec, VolSpec,
};
pub use seed::Seeder;
pub use spectra::{
    build_matrix, diagonal_comparison, top_eigenvalues, ObservationMatrix, SpectrumResult,
};
pub use tail::{hill_estimate, normalizing_sequence, sample_tail, NormalizingSequence, TailLaw};
pub use verify::{
    ks_distance, run_experiment, validate_growth, ExperimentConfig, Growth, VerificationReport,
};
