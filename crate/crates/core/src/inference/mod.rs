//! Posterior summaries and diagnostics computed from retained draws.
//!
//! Every function here is a deterministic function of its inputs; those
//! that simulate take an explicit generator.

mod checks;
mod convergence;
mod risk;
mod surface;

pub use checks::{pit_diagnostic, posterior_predictive_mean_check, PitReport, PredictiveCell, PredictiveReport, PIT_BINS};
pub use convergence::{convergence_stats, effective_sample_size, split_rhat, ParamDiagnostic};
pub use risk::{risk_parameters, CellRisk, RiskSummary};
pub use surface::{safe_exposure_map, surface_summary, Band, CellSurface, ExposureMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Domain, HierarchyParams};

/// Default points per axis of the evaluation grid.
pub const DEFAULT_GRID_POINTS: usize = 101;

/// Rectangular evaluation grid over dose and time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    pub doses: Vec<f64>,
    pub times: Vec<f64>,
}

impl EvalGrid {
    /// `n` equally spaced points per axis spanning `[0, D] x [0, T]`.
    pub fn uniform(domain: Domain, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("grid needs at least 2 points per axis, got {n}")));
        }
        let axis = |m: f64| (0..n).map(|k| m * k as f64 / (n - 1) as f64).collect();
        Ok(Self {
            doses: axis(domain.dose_max),
            times: axis(domain.time_max),
        })
    }

    pub fn validate(&self, domain: Domain) -> Result<()> {
        if self.doses.is_empty() || self.times.is_empty() {
            return Err(Error::Config("evaluation grid is empty".into()));
        }
        for (what, xs, m) in [("dose", &self.doses, domain.dose_max), ("time", &self.times, domain.time_max)] {
            if let Some(x) = xs.iter().find(|x| !(0.0..=m).contains(*x)) {
                return Err(Error::domain(what, *x, format!("grid point outside [0, {m}]")));
            }
        }
        Ok(())
    }
}

pub(crate) fn require_draws(draws: &[HierarchyParams]) -> Result<&HierarchyParams> {
    draws
        .first()
        .ok_or_else(|| Error::Unavailable("the chain has no retained draws".into()))
}
