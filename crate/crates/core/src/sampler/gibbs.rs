//! Conditionally conjugate updates.
//!
//! Coefficients, baselines and precisions are drawn from their full
//! conditionals. Population means of sign-constrained coefficients and their
//! variances are drawn from the conjugate part of the conditional and
//! corrected with an independence Metropolis step for the truncation
//! normaliser of the cell-level prior, which depends on both.

use rand::Rng;

use crate::basis::SplineComponent;
use crate::error::{Error, Result};
use crate::model::density::{gamma_logpdf, ln_normal_mass};
use crate::model::likelihood::cell_sse;
use crate::model::prior::{coef_bounds, Bound, ComponentKind, GammaPrior, PriorConfig};
use crate::model::{Dataset, HierarchyParams};
use crate::variates;

#[inline]
pub(crate) fn component_arg(kind: ComponentKind, d: f64, t: f64) -> f64 {
    match kind {
        ComponentKind::Dose => d,
        ComponentKind::Time => t,
        ComponentKind::Interaction => d * t,
    }
}

pub(crate) fn component(state: &HierarchyParams, i: usize, j: usize, kind: ComponentKind) -> Option<&SplineComponent> {
    let c = state.cell(i, j);
    match kind {
        ComponentKind::Dose => Some(&c.dose),
        ComponentKind::Time => Some(&c.time),
        ComponentKind::Interaction => c.interaction.as_ref(),
    }
}

pub(crate) fn component_mut(state: &mut HierarchyParams, i: usize, j: usize, kind: ComponentKind) -> Option<&mut SplineComponent> {
    let c = state.cell_mut(i, j);
    match kind {
        ComponentKind::Dose => Some(&mut c.dose),
        ComponentKind::Time => Some(&mut c.time),
        ComponentKind::Interaction => c.interaction.as_mut(),
    }
}

fn accept<R: Rng + ?Sized>(rng: &mut R, log_ratio: f64) -> bool {
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}

/// Baseline `alpha_ij` from its normal full conditional.
pub fn update_alpha<R: Rng + ?Sized>(state: &mut HierarchyParams, data: &Dataset, rng: &mut R, i: usize, j: usize) {
    let w = 1.0 / state.noise_var(i, j);
    let p = &state.particles[i];
    let (prior_mean, prior_var) = (p.alpha_o, p.sigma2_alpha);
    let surf = state.cell(i, j);
    let cell = data.cell(i, j);
    let mut sum = 0.0;
    for ((&d, &t), &y) in cell.dose.iter().zip(&cell.time).zip(&cell.y) {
        sum += y - (surf.value(d, t) - surf.alpha);
    }
    let prec = w * cell.len() as f64 + 1.0 / prior_var;
    let mean = (w * sum + prior_mean / prior_var) / prec;
    state.cell_mut(i, j).alpha = variates::normal(rng, mean, prec.recip().sqrt());
}

/// Prior mean and variance of coefficient `l` of a component.
fn coef_prior(state: &HierarchyParams, prior: &PriorConfig, i: usize, kind: ComponentKind, l: usize) -> (f64, f64) {
    let p = &state.particles[i];
    match kind {
        ComponentKind::Dose => (p.beta_o[l], p.sigma2_beta[l]),
        ComponentKind::Time => (p.gamma_o[l], p.sigma2_gamma[l]),
        ComponentKind::Interaction => (prior.delta.mean, prior.delta.var),
    }
}

/// Coefficient `l` of one component from its univariate truncated-normal
/// full conditional. Fixed coordinates and absent components are left alone.
pub fn update_coefficient<R: Rng + ?Sized>(
    state: &mut HierarchyParams,
    data: &Dataset,
    prior: &PriorConfig,
    rng: &mut R,
    i: usize,
    j: usize,
    kind: ComponentKind,
    l: usize,
) -> Result<()> {
    let Bound::Range { lo, hi } = coef_bounds(kind, prior.pin_coef2)[l] else {
        return Ok(());
    };
    let Some(comp) = component(state, i, j, kind) else {
        return Ok(());
    };
    let w = 1.0 / state.noise_var(i, j);
    let (mu, var) = coef_prior(state, prior, i, kind, l);
    let current = comp.coef[l];
    let surf = state.cell(i, j);
    let cell = data.cell(i, j);
    let (mut sbb, mut sbe) = (0.0, 0.0);
    for ((&d, &t), &y) in cell.dose.iter().zip(&cell.time).zip(&cell.y) {
        let b = comp.basis(component_arg(kind, d, t))[l];
        if b == 0.0 {
            continue;
        }
        let e = y - surf.value(d, t) + current * b;
        sbb += b * b;
        sbe += b * e;
    }
    let prec = w * sbb + 1.0 / var;
    let mean = (w * sbe + mu / var) / prec;
    let draw = variates::truncated_normal(rng, mean, prec.recip().sqrt(), lo, hi)?;
    if let Some(c) = component_mut(state, i, j, kind) {
        c.coef[l] = draw;
    }
    Ok(())
}

/// `alpha_o` from its normal full conditional.
pub fn update_population_alpha<R: Rng + ?Sized>(state: &mut HierarchyParams, prior: &PriorConfig, rng: &mut R, i: usize) {
    let outcomes = state.dims.outcomes;
    let s2 = state.particles[i].sigma2_alpha;
    let sum: f64 = (0..outcomes).map(|j| state.cell(i, j).alpha).sum();
    let prec = outcomes as f64 / s2 + 1.0 / prior.alpha_o.var;
    let mean = (sum / s2 + prior.alpha_o.mean / prior.alpha_o.var) / prec;
    state.particles[i].alpha_o = variates::normal(rng, mean, prec.recip().sqrt());
}

fn cell_coefs(state: &HierarchyParams, i: usize, kind: ComponentKind, l: usize) -> Vec<f64> {
    (0..state.dims.outcomes)
        .map(|j| match kind {
            ComponentKind::Dose => state.cell(i, j).dose.coef[l],
            _ => state.cell(i, j).time.coef[l],
        })
        .collect()
}

/// Population mean of coefficient `l` for the dose (`beta_o`) or time
/// (`gamma_o`) component of particle `i`.
pub fn update_population_mean<R: Rng + ?Sized>(
    state: &mut HierarchyParams,
    prior: &PriorConfig,
    rng: &mut R,
    i: usize,
    kind: ComponentKind,
    l: usize,
) -> Result<bool> {
    let Bound::Range { lo, hi } = coef_bounds(kind, prior.pin_coef2)[l] else {
        return Ok(false);
    };
    let (hyper, current, s2) = match kind {
        ComponentKind::Dose => (prior.beta_o, state.particles[i].beta_o[l], state.particles[i].sigma2_beta[l]),
        ComponentKind::Time => (prior.gamma_o, state.particles[i].gamma_o[l], state.particles[i].sigma2_gamma[l]),
        ComponentKind::Interaction => return Ok(false),
    };
    let xs = cell_coefs(state, i, kind, l);
    let n = xs.len() as f64;
    let prec = n / s2 + 1.0 / hyper.var;
    let mean = (xs.iter().sum::<f64>() / s2 + hyper.mean / hyper.var) / prec;
    let proposal = variates::truncated_normal(rng, mean, prec.recip().sqrt(), lo, hi)?;
    let log_ratio = n * (ln_normal_mass(current, s2, lo, hi) - ln_normal_mass(proposal, s2, lo, hi));
    let accepted = accept(rng, log_ratio);
    if accepted {
        let p = &mut state.particles[i];
        match kind {
            ComponentKind::Dose => p.beta_o[l] = proposal,
            _ => p.gamma_o[l] = proposal,
        }
    }
    Ok(accepted)
}

/// One sweep over baselines, all free coefficients and the population means.
pub fn gibbs_update_linear_block<R: Rng + ?Sized>(
    state: &mut HierarchyParams,
    data: &Dataset,
    prior: &PriorConfig,
    rng: &mut R,
) -> Result<()> {
    let dims = state.dims;
    for i in 0..dims.particles {
        for j in 0..dims.outcomes {
            update_alpha(state, data, rng, i, j);
            for kind in [ComponentKind::Dose, ComponentKind::Time, ComponentKind::Interaction] {
                for l in 1..4 {
                    update_coefficient(state, data, prior, rng, i, j, kind, l)?;
                }
            }
        }
        update_population_alpha(state, prior, rng, i);
        for kind in [ComponentKind::Dose, ComponentKind::Time] {
            for l in 1..4 {
                update_population_mean(state, prior, rng, i, kind, l)?;
            }
        }
    }
    Ok(())
}

/// `1 / sigma2_eps[j] ~ Gamma(a + n_j / 2, b + sum tau_i r^2 / 2)`.
pub fn update_eps_variance<R: Rng + ?Sized>(
    state: &mut HierarchyParams,
    data: &Dataset,
    prior: &PriorConfig,
    rng: &mut R,
    j: usize,
) -> Result<()> {
    let mut weighted = 0.0;
    for i in 0..state.dims.particles {
        weighted += state.particles[i].tau * cell_sse(state.cell(i, j), data.cell(i, j));
    }
    let n = data.outcome_count(j) as f64;
    let g = prior.eps_precision;
    state.sigma2_eps[j] = variates::precision_variance(rng, g.shape + 0.5 * n, g.rate + 0.5 * weighted)?;
    Ok(())
}

pub fn update_alpha_variance<R: Rng + ?Sized>(state: &mut HierarchyParams, prior: &PriorConfig, rng: &mut R, i: usize) -> Result<()> {
    let ao = state.particles[i].alpha_o;
    let ss: f64 = (0..state.dims.outcomes)
        .map(|j| (state.cell(i, j).alpha - ao).powi(2))
        .sum();
    let g = prior.alpha_precision;
    state.particles[i].sigma2_alpha = variates::precision_variance(rng, g.shape + 0.5 * state.dims.outcomes as f64, g.rate + 0.5 * ss)?;
    Ok(())
}

/// Variance of coefficient `l` across the outcomes of particle `i`.
/// Coordinates that are fixed at zero carry no information and are drawn
/// from their prior.
pub fn update_coef_variance<R: Rng + ?Sized>(
    state: &mut HierarchyParams,
    prior: &PriorConfig,
    rng: &mut R,
    i: usize,
    kind: ComponentKind,
    l: usize,
) -> Result<bool> {
    let g: GammaPrior = match kind {
        ComponentKind::Dose => prior.beta_precision,
        ComponentKind::Time => prior.gamma_precision,
        ComponentKind::Interaction => return Ok(false),
    };
    let (mu, current) = match kind {
        ComponentKind::Dose => (state.particles[i].beta_o[l], state.particles[i].sigma2_beta[l]),
        _ => (state.particles[i].gamma_o[l], state.particles[i].sigma2_gamma[l]),
    };
    let set = |state: &mut HierarchyParams, v: f64| match kind {
        ComponentKind::Dose => state.particles[i].sigma2_beta[l] = v,
        _ => state.particles[i].sigma2_gamma[l] = v,
    };
    let Bound::Range { lo, hi } = coef_bounds(kind, prior.pin_coef2)[l] else {
        let v = variates::precision_variance(rng, g.shape, g.rate)?;
        set(state, v);
        return Ok(true);
    };
    let xs = cell_coefs(state, i, kind, l);
    let n = xs.len() as f64;
    let ss: f64 = xs.iter().map(|x| (x - mu).powi(2)).sum();
    let proposal = variates::precision_variance(rng, g.shape + 0.5 * n, g.rate + 0.5 * ss)?;
    let log_ratio = n * (ln_normal_mass(mu, current, lo, hi) - ln_normal_mass(mu, proposal, lo, hi));
    let accepted = accept(rng, log_ratio);
    if accepted {
        set(state, proposal);
    }
    Ok(accepted)
}

/// `tau_i ~ Gamma((nu + n_i) / 2, (nu + sum r^2 / sigma2_eps_j) / 2)`.
pub fn update_tau<R: Rng + ?Sized>(state: &mut HierarchyParams, data: &Dataset, rng: &mut R, i: usize) -> Result<()> {
    let mut scaled = 0.0;
    for j in 0..state.dims.outcomes {
        scaled += cell_sse(state.cell(i, j), data.cell(i, j)) / state.sigma2_eps[j];
    }
    let nu = state.nu as f64;
    let n = data.particle_count(i) as f64;
    let tau = variates::gamma(rng, 0.5 * (nu + n), 0.5 * (nu + scaled))?;
    if !(tau.is_normal() && tau.is_finite()) {
        return Err(Error::Numerical(format!("tau[{}] draw {tau} is degenerate", i + 1)));
    }
    state.particles[i].tau = tau;
    Ok(())
}

/// Exact discrete draw of the degrees of freedom over the prior support.
pub fn update_nu<R: Rng + ?Sized>(state: &mut HierarchyParams, prior: &PriorConfig, rng: &mut R) -> Result<()> {
    let logw: Vec<f64> = prior
        .nu_support
        .iter()
        .map(|&nu| {
            let h = 0.5 * nu as f64;
            state.particles.iter().map(|p| gamma_logpdf(p.tau, h, h)).sum()
        })
        .collect();
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical("degrees-of-freedom weights are all zero".into()));
    }
    let weights: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            state.nu = prior.nu_support[k];
            return Ok(());
        }
        u -= w;
    }
    state.nu = *prior.nu_support.last().expect("validated non-empty");
    Ok(())
}

/// `pi ~ Beta(1 + sum rho, 1 + IJ - sum rho)`.
pub fn update_pi<R: Rng + ?Sized>(state: &mut HierarchyParams, rng: &mut R) -> Result<()> {
    let k = state.included_count() as f64;
    let n = state.cells.len() as f64;
    for _ in 0..variates::RETRY_BUDGET {
        let pi = variates::beta(rng, 1.0 + k, 1.0 + n - k)?;
        if pi > 0.0 && pi < 1.0 {
            state.pi = pi;
            return Ok(());
        }
    }
    Err(Error::Numerical("inclusion probability draw stuck at 0 or 1".into()))
}

/// Rates of the knot prior of particle `i`: with the first knot
/// `B(1, l1)`-distributed and the second `B(l2, 1)` on the remaining
/// interval, both rates are conjugate to their Gamma priors, truncated to
/// `1 < l1 < l2`.
pub fn update_lambda<R: Rng + ?Sized>(
    state: &mut HierarchyParams,
    prior: &PriorConfig,
    rng: &mut R,
    i: usize,
    kind: ComponentKind,
) -> Result<()> {
    let (gp, m) = match kind {
        ComponentKind::Dose => (prior.lambda_phi, state.domain.dose_max),
        ComponentKind::Time => (prior.lambda_psi, state.domain.time_max),
        ComponentKind::Interaction => return Ok(()),
    };
    let knots: Vec<[f64; 2]> = (0..state.dims.outcomes)
        .map(|j| match kind {
            ComponentKind::Dose => state.cell(i, j).dose.knots,
            _ => state.cell(i, j).time.knots,
        })
        .collect();
    let n = knots.len() as f64;
    let s1: f64 = knots.iter().map(|k| ((m - k[0]) / m).ln()).sum();
    let s2: f64 = knots.iter().map(|k| ((k[1] - k[0]) / (m - k[0])).ln()).sum();
    let mut lam = match kind {
        ComponentKind::Dose => state.particles[i].lambda_phi,
        _ => state.particles[i].lambda_psi,
    };
    lam[0] = variates::truncated_gamma(rng, gp[0].shape + n, gp[0].rate - s1, 1.0, lam[1])?;
    lam[1] = variates::truncated_gamma(rng, gp[1].shape + n, gp[1].rate - s2, lam[0], f64::INFINITY)?;
    match kind {
        ComponentKind::Dose => state.particles[i].lambda_phi = lam,
        _ => state.particles[i].lambda_psi = lam,
    }
    Ok(())
}

/// One sweep over every variance, precision multiplier and hyperparameter.
pub fn gibbs_update_scales<R: Rng + ?Sized>(
    state: &mut HierarchyParams,
    data: &Dataset,
    prior: &PriorConfig,
    rng: &mut R,
) -> Result<()> {
    let dims = state.dims;
    for j in 0..dims.outcomes {
        update_eps_variance(state, data, prior, rng, j)?;
    }
    for i in 0..dims.particles {
        update_alpha_variance(state, prior, rng, i)?;
        for kind in [ComponentKind::Dose, ComponentKind::Time] {
            for l in 0..4 {
                update_coef_variance(state, prior, rng, i, kind, l)?;
            }
            update_lambda(state, prior, rng, i, kind)?;
        }
        update_tau(state, data, rng, i)?;
    }
    update_nu(state, prior, rng)?;
    update_pi(state, rng)?;
    Ok(())
}
