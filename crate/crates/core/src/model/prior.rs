//! Prior configuration, the joint prior density and ancestral prior draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{SplineComponent, SurfaceParams};
use crate::error::{Error, Result};
use crate::model::dataset::{Dims, Domain};
use crate::model::density::{bivariate_beta_logpdf, gamma_logpdf, normal_logpdf, truncnorm_logpdf};
use crate::model::params::{HierarchyParams, ParticleParams};
use crate::variates;

/// Lower bound applied to the strictly positive interaction coefficients.
pub const INTERACTION_FLOOR: f64 = 1e-8;

/// `Gamma(shape, rate)`, mean `shape / rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub const fn new(shape: f64, rate: f64) -> Self {
        Self { shape, rate }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        gamma_logpdf(x, self.shape, self.rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub var: f64,
}

impl NormalPrior {
    pub const fn new(mean: f64, var: f64) -> Self {
        Self { mean, var }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    /// Prior on each outcome's error precision `1 / sigma2_eps`.
    pub eps_precision: GammaPrior,
    pub alpha_precision: GammaPrior,
    pub beta_precision: GammaPrior,
    pub gamma_precision: GammaPrior,
    pub lambda_phi: [GammaPrior; 2],
    pub lambda_psi: [GammaPrior; 2],
    pub alpha_o: NormalPrior,
    /// Applied coordinate-wise and truncated to the coefficient sign pattern.
    pub beta_o: NormalPrior,
    pub gamma_o: NormalPrior,
    /// Interaction coefficients, given inclusion.
    pub delta: NormalPrior,
    /// `(a1, b1, a2, b2)` of the bivariate Beta on the interaction knots.
    pub chi_shape: [f64; 4],
    pub nu_support: Vec<u32>,
    /// Pins the second coefficient of every component to zero, making the
    /// first knot the end of a flat no-effect region.
    pub pin_coef2: bool,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            eps_precision: GammaPrior::new(0.01, 0.01),
            alpha_precision: GammaPrior::new(1.0, 0.1),
            beta_precision: GammaPrior::new(1.0, 0.1),
            gamma_precision: GammaPrior::new(1.0, 0.1),
            lambda_phi: [GammaPrior::new(2.0, 1.0), GammaPrior::new(3.0, 1.0)],
            lambda_psi: [GammaPrior::new(2.0, 1.0), GammaPrior::new(3.0, 1.0)],
            alpha_o: NormalPrior::new(0.0, 10.0),
            beta_o: NormalPrior::new(1.0, 10.0),
            gamma_o: NormalPrior::new(1.0, 10.0),
            delta: NormalPrior::new(1.0, 10.0),
            chi_shape: [2.0, 3.0, 1.0, 1.0],
            nu_support: vec![1, 2, 4, 8, 16, 32],
            pin_coef2: true,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        let gammas = [
            ("eps_precision", self.eps_precision),
            ("alpha_precision", self.alpha_precision),
            ("beta_precision", self.beta_precision),
            ("gamma_precision", self.gamma_precision),
            ("lambda_phi[1]", self.lambda_phi[0]),
            ("lambda_phi[2]", self.lambda_phi[1]),
            ("lambda_psi[1]", self.lambda_psi[0]),
            ("lambda_psi[2]", self.lambda_psi[1]),
        ];
        for (name, g) in gammas {
            if !(g.shape > 0.0 && g.rate > 0.0 && g.shape.is_finite() && g.rate.is_finite()) {
                return Err(Error::Config(format!("{name}: shape and rate must be positive")));
            }
        }
        let normals = [
            ("alpha_o", self.alpha_o),
            ("beta_o", self.beta_o),
            ("gamma_o", self.gamma_o),
            ("delta", self.delta),
        ];
        for (name, n) in normals {
            if !(n.var > 0.0 && n.var.is_finite() && n.mean.is_finite()) {
                return Err(Error::Config(format!("{name}: variance must be positive")));
            }
        }
        if !self.chi_shape.iter().all(|&s| s > 0.0 && s.is_finite()) {
            return Err(Error::Config("chi_shape entries must be positive".into()));
        }
        if self.nu_support.is_empty() || self.nu_support.contains(&0) {
            return Err(Error::Config("nu_support must be non-empty and positive".into()));
        }
        Ok(())
    }
}

/// Which additive effect a spline component models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentKind {
    Dose,
    Time,
    Interaction,
}

/// Support of one spline coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// Identically zero.
    Fixed,
    Range { lo: f64, hi: f64 },
}

impl Bound {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Bound::Fixed => x == 0.0,
            Bound::Range { lo, hi } => x >= lo && x <= hi,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Bound::Range { .. })
    }
}

/// Sign pattern of the four coefficients: the first is zero, the second
/// non-positive (or pinned), the last two non-negative (strictly positive
/// for the interaction).
pub fn coef_bounds(kind: ComponentKind, pin_coef2: bool) -> [Bound; 4] {
    let floor = match kind {
        ComponentKind::Interaction => INTERACTION_FLOOR,
        _ => 0.0,
    };
    let second = if pin_coef2 {
        Bound::Fixed
    } else {
        Bound::Range {
            lo: f64::NEG_INFINITY,
            hi: 0.0,
        }
    };
    let up = Bound::Range {
        lo: floor,
        hi: f64::INFINITY,
    };
    [Bound::Fixed, second, up, up]
}

/// Density over an ordered knot pair on `(0, m)`.
///
/// This is the seam for alternative change-point priors; the sampler's
/// conjugate update of the knot-prior rates assumes [`BivariateBeta`].
pub trait KnotPrior {
    fn ln_density(&self, knots: [f64; 2], m: f64) -> f64;
    fn sample(&self, rng: &mut dyn rand::RngCore, m: f64) -> Result<[f64; 2]>;
}

/// Generalised bivariate Beta `B2(a1, b1, a2, b2, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateBeta {
    pub shape: [f64; 4],
}

impl BivariateBeta {
    /// `B2(1, l1, l2, 1)`: right-skewed first knot, second knot diffuse
    /// toward the upper boundary.
    pub fn from_rates(lambda: [f64; 2]) -> Self {
        Self {
            shape: [1.0, lambda[0], lambda[1], 1.0],
        }
    }
}

impl KnotPrior for BivariateBeta {
    fn ln_density(&self, knots: [f64; 2], m: f64) -> f64 {
        let [a1, b1, a2, b2] = self.shape;
        bivariate_beta_logpdf(knots[0], knots[1], a1, b1, a2, b2, m)
    }

    fn sample(&self, mut rng: &mut dyn rand::RngCore, m: f64) -> Result<[f64; 2]> {
        variates::bivariate_beta(&mut rng, self.shape, m)
    }
}

/// Log-density of one component's coefficients under independent
/// truncated normals `N(mean[l], var[l])` restricted to the sign pattern.
pub fn coef_log_prior(coef: &[f64; 4], bounds: &[Bound; 4], mean: &[f64; 4], var: &[f64; 4]) -> f64 {
    let mut lp = 0.0;
    for l in 0..4 {
        lp += match bounds[l] {
            Bound::Fixed if coef[l] == 0.0 => 0.0,
            Bound::Fixed => return f64::NEG_INFINITY,
            Bound::Range { lo, hi } => truncnorm_logpdf(coef[l], mean[l], var[l], lo, hi),
        };
    }
    lp
}

fn lambda_log_prior(lambda: [f64; 2], prior: &[GammaPrior; 2]) -> f64 {
    if !(1.0 < lambda[0] && lambda[0] < lambda[1]) {
        return f64::NEG_INFINITY;
    }
    prior[0].ln_pdf(lambda[0]) + prior[1].ln_pdf(lambda[1])
}

/// Joint prior log-density of the state, `-inf` on any constraint violation.
///
/// Variance parameters enter through their precisions; the truncated
/// Gamma prior on the knot-prior rates is left unnormalised (its constant
/// does not involve the state).
pub fn log_prior(state: &HierarchyParams, cfg: &PriorConfig) -> f64 {
    let dims = state.dims;
    let dom = state.domain;
    if state.cells.len() != dims.cells() || !(state.pi > 0.0 && state.pi < 1.0) {
        return f64::NEG_INFINITY;
    }
    if !cfg.nu_support.contains(&state.nu) {
        return f64::NEG_INFINITY;
    }
    let mut lp = -(cfg.nu_support.len() as f64).ln();
    for s2 in &state.sigma2_eps {
        lp += cfg.eps_precision.ln_pdf(1.0 / s2);
    }
    let dose_bounds = coef_bounds(ComponentKind::Dose, cfg.pin_coef2);
    let time_bounds = coef_bounds(ComponentKind::Time, cfg.pin_coef2);
    let nu = state.nu as f64;
    for (i, p) in state.particles.iter().enumerate() {
        lp += cfg.alpha_precision.ln_pdf(1.0 / p.sigma2_alpha);
        for l in 0..4 {
            lp += cfg.beta_precision.ln_pdf(1.0 / p.sigma2_beta[l]);
            lp += cfg.gamma_precision.ln_pdf(1.0 / p.sigma2_gamma[l]);
        }
        lp += normal_logpdf(p.alpha_o, cfg.alpha_o.mean, cfg.alpha_o.var);
        lp += coef_log_prior(&p.beta_o, &dose_bounds, &[cfg.beta_o.mean; 4], &[cfg.beta_o.var; 4]);
        lp += coef_log_prior(&p.gamma_o, &time_bounds, &[cfg.gamma_o.mean; 4], &[cfg.gamma_o.var; 4]);
        lp += lambda_log_prior(p.lambda_phi, &cfg.lambda_phi);
        lp += lambda_log_prior(p.lambda_psi, &cfg.lambda_psi);
        lp += gamma_logpdf(p.tau, 0.5 * nu, 0.5 * nu);

        let phi_prior = BivariateBeta::from_rates(p.lambda_phi);
        let psi_prior = BivariateBeta::from_rates(p.lambda_psi);
        for j in 0..dims.outcomes {
            let c = state.cell(i, j);
            lp += normal_logpdf(c.alpha, p.alpha_o, p.sigma2_alpha);
            lp += coef_log_prior(&c.dose.coef, &dose_bounds, &p.beta_o, &p.sigma2_beta);
            lp += coef_log_prior(&c.time.coef, &time_bounds, &p.gamma_o, &p.sigma2_gamma);
            lp += phi_prior.ln_density(c.dose.knots, dom.dose_max);
            lp += psi_prior.ln_density(c.time.knots, dom.time_max);
            match &c.interaction {
                Some(h) => {
                    lp += state.pi.ln();
                    lp += interaction_log_prior(h, cfg, dom);
                }
                None => lp += (1.0 - state.pi).ln(),
            }
        }
    }
    if lp.is_nan() {
        f64::NEG_INFINITY
    } else {
        lp
    }
}

/// `ln p(delta | rho = 1) + ln p(chi | rho = 1)`.
pub fn interaction_log_prior(h: &SplineComponent, cfg: &PriorConfig, dom: Domain) -> f64 {
    let bounds = coef_bounds(ComponentKind::Interaction, cfg.pin_coef2);
    coef_log_prior(&h.coef, &bounds, &[cfg.delta.mean; 4], &[cfg.delta.var; 4])
        + BivariateBeta {
            shape: cfg.chi_shape,
        }
        .ln_density(h.knots, dom.interaction_max())
}

fn draw_coefs<R: Rng>(rng: &mut R, bounds: &[Bound; 4], mean: &[f64; 4], var: &[f64; 4]) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for l in 0..4 {
        if let Bound::Range { lo, hi } = bounds[l] {
            out[l] = variates::truncated_normal(rng, mean[l], var[l].sqrt(), lo, hi)
                .map_err(|e| Error::Numerical(format!("coefficient {} prior draw: {e}", l + 1)))?;
        }
    }
    Ok(out)
}

fn draw_lambda<R: Rng>(rng: &mut R, prior: &[GammaPrior; 2], name: &str) -> Result<[f64; 2]> {
    for _ in 0..variates::RETRY_BUDGET {
        let l1 = variates::gamma(rng, prior[0].shape, prior[0].rate)?;
        let l2 = variates::gamma(rng, prior[1].shape, prior[1].rate)?;
        if 1.0 < l1 && l1 < l2 {
            return Ok([l1, l2]);
        }
    }
    Err(Error::Numerical(format!(
        "{name}: constraint 1 < l1 < l2 not met within {} prior draws",
        variates::RETRY_BUDGET
    )))
}

fn draw_precision_var<R: Rng>(rng: &mut R, g: GammaPrior) -> Result<f64> {
    variates::precision_variance(rng, g.shape, g.rate)
}

/// Draws a state from the prior by ancestral sampling, hyperpriors first.
pub fn sample_prior(cfg: &PriorConfig, dims: Dims, domain: Domain, seed: u64) -> Result<HierarchyParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_prior_with(&mut rng, cfg, dims, domain)
}

pub fn sample_prior_with<R: Rng>(rng: &mut R, cfg: &PriorConfig, dims: Dims, domain: Domain) -> Result<HierarchyParams> {
    cfg.validate()?;
    let sigma2_eps = (0..dims.outcomes)
        .map(|_| draw_precision_var(rng, cfg.eps_precision))
        .collect::<Result<Vec<_>>>()?;
    let pi = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let nu = cfg.nu_support[rng.random_range(0..cfg.nu_support.len())];
    let dose_bounds = coef_bounds(ComponentKind::Dose, cfg.pin_coef2);
    let time_bounds = coef_bounds(ComponentKind::Time, cfg.pin_coef2);
    let inter_bounds = coef_bounds(ComponentKind::Interaction, cfg.pin_coef2);
    let chi_prior = BivariateBeta {
        shape: cfg.chi_shape,
    };

    let mut particles = Vec::with_capacity(dims.particles);
    let mut cells = Vec::with_capacity(dims.cells());
    for _ in 0..dims.particles {
        let sigma2_alpha = draw_precision_var(rng, cfg.alpha_precision)?;
        let mut sigma2_beta = [0.0; 4];
        let mut sigma2_gamma = [0.0; 4];
        for l in 0..4 {
            sigma2_beta[l] = draw_precision_var(rng, cfg.beta_precision)?;
            sigma2_gamma[l] = draw_precision_var(rng, cfg.gamma_precision)?;
        }
        let alpha_o = variates::normal(rng, cfg.alpha_o.mean, cfg.alpha_o.var.sqrt());
        let beta_o = draw_coefs(rng, &dose_bounds, &[cfg.beta_o.mean; 4], &[cfg.beta_o.var; 4])?;
        let gamma_o = draw_coefs(rng, &time_bounds, &[cfg.gamma_o.mean; 4], &[cfg.gamma_o.var; 4])?;
        let lambda_phi = draw_lambda(rng, &cfg.lambda_phi, "lambda_phi")?;
        let lambda_psi = draw_lambda(rng, &cfg.lambda_psi, "lambda_psi")?;
        let tau = loop {
            let t = variates::gamma(rng, 0.5 * nu as f64, 0.5 * nu as f64)?;
            if t.is_normal() {
                break t;
            }
        };
        let p = ParticleParams {
            alpha_o,
            beta_o,
            gamma_o,
            lambda_phi,
            lambda_psi,
            tau,
            sigma2_alpha,
            sigma2_beta,
            sigma2_gamma,
        };
        for _ in 0..dims.outcomes {
            let alpha = variates::normal(rng, p.alpha_o, p.sigma2_alpha.sqrt());
            let beta = draw_coefs(rng, &dose_bounds, &p.beta_o, &p.sigma2_beta)?;
            let phi = BivariateBeta::from_rates(p.lambda_phi).sample(rng, domain.dose_max)?;
            let gamma = draw_coefs(rng, &time_bounds, &p.gamma_o, &p.sigma2_gamma)?;
            let psi = BivariateBeta::from_rates(p.lambda_psi).sample(rng, domain.time_max)?;
            let interaction = if rng.random::<f64>() < pi {
                let delta = draw_coefs(rng, &inter_bounds, &[cfg.delta.mean; 4], &[cfg.delta.var; 4])?;
                let chi = chi_prior.sample(rng, domain.interaction_max())?;
                Some(SplineComponent::new(chi, delta, domain.interaction_max())?)
            } else {
                None
            };
            cells.push(SurfaceParams {
                alpha,
                dose: SplineComponent::new(phi, beta, domain.dose_max)?,
                time: SplineComponent::new(psi, gamma, domain.time_max)?,
                interaction,
            });
        }
        particles.push(p);
    }
    Ok(HierarchyParams {
        dims,
        domain,
        cells,
        particles,
        sigma2_eps,
        pi,
        nu,
    })
}
