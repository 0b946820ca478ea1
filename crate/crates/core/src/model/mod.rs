//! Probability model: data container, parameter state, likelihood and priors.

pub mod dataset;
pub mod density;
pub mod likelihood;
pub mod params;
pub mod prior;

pub use dataset::{CellData, Dataset, Dims, Domain, Record};
pub use density::bivariate_beta_logpdf;
pub use likelihood::{log_likelihood, log_posterior};
pub use params::{HierarchyParams, ParticleParams};
pub use prior::{
    coef_bounds, log_prior, sample_prior, BivariateBeta, Bound, ComponentKind, GammaPrior,
    KnotPrior, NormalPrior, PriorConfig,
};
