//! Hierarchical Bayesian dose x time response surfaces with free-knot
//! piecewise-linear components.
//!
//! The crate is organised bottom-up:
//!
//! * [`basis`]: hat-function spline basis and surface evaluation.
//! * [`model`]: datasets, the hierarchical parameter state, the likelihood
//!   and every prior density.
//! * [`sampler`]: the hybrid Gibbs / Metropolis-Hastings / reversible-jump
//!   chain driver.
//! * [`inference`]: risk parameters, surface bands, safe-exposure maps and
//!   posterior diagnostics.
//! * [`synth`]: synthetic screening designs with known truth.

pub mod basis;
pub mod error;
pub mod inference;
pub mod model;
pub mod sampler;
pub mod stats;
pub mod synth;
pub mod variates;

pub use basis::{eval_component, eval_surface, spline_basis, SplineComponent, SurfaceParams};
pub use error::{Error, Result};
pub use model::{
    bivariate_beta_logpdf, log_likelihood, log_posterior, log_prior, sample_prior, Dataset, Dims,
    Domain, HierarchyParams, ParticleParams, PriorConfig, Record,
};
pub use inference::{
    convergence_stats, pit_diagnostic, posterior_predictive_mean_check, risk_parameters, safe_exposure_map,
    surface_summary, EvalGrid, RiskSummary,
};
pub use sampler::{run_chain, run_chain_with, run_chains, ChainAbort, ChainOutput, DrawSink, SamplerConfig, Telemetry};
pub use synth::{score_recovery, simulate_dataset, RecoveryReport, Truth, TruthFn, TruthSpec};
