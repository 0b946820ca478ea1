use serde::{Deserialize, Serialize};

use crate::basis::{check_knots, SplineComponent, SurfaceParams};
use crate::error::{Error, Result};
use crate::model::dataset::{Dims, Domain};
use crate::model::prior::{coef_bounds, ComponentKind, PriorConfig};

/// Particle-level (stage 3) parameters and the particle's variance inflation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleParams {
    pub alpha_o: f64,
    pub beta_o: [f64; 4],
    pub gamma_o: [f64; 4],
    /// Shapes of the dose-knot prior, `1 < lambda[0] < lambda[1]`.
    pub lambda_phi: [f64; 2],
    pub lambda_psi: [f64; 2],
    pub tau: f64,
    pub sigma2_alpha: f64,
    pub sigma2_beta: [f64; 4],
    pub sigma2_gamma: [f64; 4],
}

/// Complete sampler state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyParams {
    pub dims: Dims,
    pub domain: Domain,
    /// Row-major over (particle, outcome); see [`Dims::cell`].
    pub cells: Vec<SurfaceParams>,
    pub particles: Vec<ParticleParams>,
    pub sigma2_eps: Vec<f64>,
    pub pi: f64,
    pub nu: u32,
}

impl HierarchyParams {
    pub fn cell(&self, particle: usize, outcome: usize) -> &SurfaceParams {
        &self.cells[self.dims.cell(particle, outcome)]
    }

    pub fn cell_mut(&mut self, particle: usize, outcome: usize) -> &mut SurfaceParams {
        let k = self.dims.cell(particle, outcome);
        &mut self.cells[k]
    }

    /// Error variance of an observation in `(particle, outcome)`.
    #[inline]
    pub fn noise_var(&self, particle: usize, outcome: usize) -> f64 {
        self.sigma2_eps[outcome] / self.particles[particle].tau
    }

    pub fn included_count(&self) -> usize {
        self.cells.iter().filter(|c| c.rho()).count()
    }

    /// Checks every structural and support constraint of the state.
    pub fn check_invariants(&self, prior: &PriorConfig) -> Result<()> {
        let d = &self.dims;
        if self.cells.len() != d.cells() || self.particles.len() != d.particles || self.sigma2_eps.len() != d.outcomes {
            return Err(Error::Config("state dimensions disagree with dims".into()));
        }
        let fail = |what: &'static str, v: f64, detail: String| Err(Error::domain(what, v, detail));
        for (k, c) in self.cells.iter().enumerate() {
            let (i, j) = d.split(k);
            let at = || format!("cell ({}, {})", i + 1, j + 1);
            if !c.alpha.is_finite() {
                return fail("alpha", c.alpha, at());
            }
            check_component(&c.dose, ComponentKind::Dose, self.domain.dose_max, prior)
                .map_err(|e| Error::Config(format!("{}: dose component: {e}", at())))?;
            check_component(&c.time, ComponentKind::Time, self.domain.time_max, prior)
                .map_err(|e| Error::Config(format!("{}: time component: {e}", at())))?;
            if let Some(h) = &c.interaction {
                check_component(h, ComponentKind::Interaction, self.domain.interaction_max(), prior)
                    .map_err(|e| Error::Config(format!("{}: interaction component: {e}", at())))?;
            }
        }
        for (i, p) in self.particles.iter().enumerate() {
            let at = || format!("particle {}", i + 1);
            for (what, lam) in [("lambda_phi", p.lambda_phi), ("lambda_psi", p.lambda_psi)] {
                if !(1.0 < lam[0] && lam[0] < lam[1] && lam[1].is_finite()) {
                    return fail(what, lam[0], format!("{}: need 1 < l1 < l2, got {lam:?}", at()));
                }
            }
            let positives = [p.tau, p.sigma2_alpha]
                .into_iter()
                .chain(p.sigma2_beta)
                .chain(p.sigma2_gamma);
            for v in positives {
                if !(v > 0.0 && v.is_finite()) {
                    return fail("variance", v, at());
                }
            }
            for (kind, means) in [(ComponentKind::Dose, p.beta_o), (ComponentKind::Time, p.gamma_o)] {
                for (l, b) in coef_bounds(kind, prior.pin_coef2).iter().enumerate() {
                    if !b.contains(means[l]) {
                        return fail("population mean", means[l], format!("{}: coordinate {}", at(), l + 1));
                    }
                }
            }
        }
        for &s in &self.sigma2_eps {
            if !(s > 0.0 && s.is_finite()) {
                return fail("sigma2_eps", s, "must be positive".into());
            }
        }
        if !(self.pi > 0.0 && self.pi < 1.0) {
            return fail("pi", self.pi, "must lie in (0, 1)".into());
        }
        if !prior.nu_support.contains(&self.nu) {
            return fail("nu", self.nu as f64, format!("outside support {:?}", prior.nu_support));
        }
        Ok(())
    }
}

fn check_component(c: &SplineComponent, kind: ComponentKind, m: f64, prior: &PriorConfig) -> Result<()> {
    if c.domain_max != m {
        return Err(Error::domain("domain_max", c.domain_max, format!("expected {m}")));
    }
    check_knots(c.knots[0], c.knots[1], m)?;
    for (l, b) in coef_bounds(kind, prior.pin_coef2).iter().enumerate() {
        if !b.contains(c.coef[l]) {
            return Err(Error::domain("coef", c.coef[l], format!("coordinate {} violates {b:?}", l + 1)));
        }
    }
    Ok(())
}
