//! Birth/death move on the interaction component of one cell.
//!
//! Births draw the interaction from a data-driven proposal: the knot pair
//! with the smallest residual sum of squares over a coarse grid, with its
//! conditional least-squares coefficients as centres. Deaths evaluate the
//! same proposal density at the removed component, so the pair of moves is
//! reversible without a Jacobian term.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{check_knots, SplineComponent, SurfaceParams};
use crate::error::{Error, Result};
use crate::model::dataset::CellData;
use crate::model::density::truncnorm_logpdf;
use crate::model::likelihood::cell_sse;
use crate::model::prior::{coef_bounds, interaction_log_prior, Bound, ComponentKind, PriorConfig};
use crate::model::{Dataset, HierarchyParams};
use crate::variates;

/// Number of interior grid points searched for the proposal centre.
const GRID_POINTS: usize = 8;
/// Knot proposal standard deviation as a fraction of the range.
const KNOT_SD_FRACTION: f64 = 0.1;
const MIN_COEF_SD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RjCounters {
    pub birth_attempts: u64,
    pub birth_accepts: u64,
    pub death_attempts: u64,
    pub death_accepts: u64,
}

impl RjCounters {
    pub fn merge(&mut self, o: &RjCounters) {
        self.birth_attempts += o.birth_attempts;
        self.birth_accepts += o.birth_accepts;
        self.death_attempts += o.death_attempts;
        self.death_accepts += o.death_accepts;
    }
}

/// Independent proposal for an interaction component.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionProposal {
    pub knot_center: [f64; 2],
    pub knot_sd: f64,
    pub coef_center: [f64; 4],
    pub coef_sd: [f64; 4],
    pub bounds: [Bound; 4],
    pub range: f64,
    /// True when no least-squares fit was available and the proposal fell
    /// back to the prior location.
    pub fallback: bool,
}

impl InteractionProposal {
    /// Builds the proposal for `base`, the cell surface without interaction.
    pub fn build(base: &SurfaceParams, cell: &CellData, noise_var: f64, prior: &PriorConfig, range: f64) -> Self {
        let bounds = coef_bounds(ComponentKind::Interaction, prior.pin_coef2);
        let fallback = Self {
            knot_center: [range / 3.0, 2.0 * range / 3.0],
            knot_sd: KNOT_SD_FRACTION * range,
            coef_center: std::array::from_fn(|l| clamp_to(bounds[l], prior.delta.mean)),
            coef_sd: [prior.delta.var.sqrt(); 4],
            bounds,
            range,
            fallback: true,
        };
        let free: Vec<usize> = (0..4).filter(|&l| bounds[l].is_free()).collect();
        if cell.len() <= free.len() {
            return fallback;
        }
        let resid: Vec<f64> = cell
            .dose
            .iter()
            .zip(&cell.time)
            .zip(&cell.y)
            .map(|((&d, &t), &y)| y - base.value(d, t))
            .collect();
        let xs: Vec<f64> = cell.dose.iter().zip(&cell.time).map(|(d, t)| d * t).collect();
        let grid: Vec<f64> = (0..GRID_POINTS)
            .map(|k| range * (k + 1) as f64 / (GRID_POINTS + 1) as f64)
            .collect();

        let mut best: Option<(f64, [f64; 2], [f64; 4], [f64; 4])> = None;
        for a in 0..GRID_POINTS {
            for b in a + 1..GRID_POINTS {
                let knots = [grid[a], grid[b]];
                let Ok(probe) = SplineComponent::new(knots, [0.0; 4], range) else { continue };
                let design = DMatrix::from_fn(xs.len(), free.len(), |r, c| probe.basis(xs[r])[free[c]]);
                let xtx = design.transpose() * &design;
                let xty = design.transpose() * DVector::from_column_slice(&resid);
                let Some(chol) = xtx.cholesky() else { continue };
                let beta = chol.solve(&xty);
                let inv = chol.inverse();
                let mut coef = [0.0; 4];
                let mut sd = [0.0; 4];
                for (c, &l) in free.iter().enumerate() {
                    coef[l] = clamp_to(bounds[l], beta[c]);
                    sd[l] = (inv[(c, c)] * noise_var).sqrt().max(MIN_COEF_SD);
                }
                let comp = SplineComponent { knots, coef, domain_max: range };
                let rss: f64 = xs.iter().zip(&resid).map(|(&x, &r)| (r - comp.value(x)).powi(2)).sum();
                if rss.is_finite() && best.as_ref().is_none_or(|b| rss < b.0) {
                    best = Some((rss, knots, coef, sd));
                }
            }
        }
        match best {
            Some((_, knots, coef, sd)) => Self {
                knot_center: knots,
                coef_center: coef,
                coef_sd: sd,
                fallback: false,
                ..fallback
            },
            None => fallback,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SplineComponent> {
        let m = self.range;
        let k1 = variates::truncated_normal(rng, self.knot_center[0], self.knot_sd, 0.0, m)?;
        let k2 = variates::truncated_normal(rng, self.knot_center[1], self.knot_sd, k1, m)?;
        let mut coef = [0.0; 4];
        for l in 0..4 {
            if let Bound::Range { lo, hi } = self.bounds[l] {
                coef[l] = variates::truncated_normal(rng, self.coef_center[l], self.coef_sd[l], lo, hi)?;
            }
        }
        Ok(SplineComponent {
            knots: [k1, k2],
            coef,
            domain_max: m,
        })
    }

    pub fn ln_density(&self, h: &SplineComponent) -> f64 {
        let m = self.range;
        let v = self.knot_sd * self.knot_sd;
        let [k1, k2] = h.knots;
        let mut lq = truncnorm_logpdf(k1, self.knot_center[0], v, 0.0, m)
            + truncnorm_logpdf(k2, self.knot_center[1], v, k1, m);
        for l in 0..4 {
            lq += match self.bounds[l] {
                Bound::Fixed if h.coef[l] == 0.0 => 0.0,
                Bound::Fixed => f64::NEG_INFINITY,
                Bound::Range { lo, hi } => {
                    truncnorm_logpdf(h.coef[l], self.coef_center[l], self.coef_sd[l].powi(2), lo, hi)
                }
            };
        }
        lq
    }
}

fn clamp_to(b: Bound, x: f64) -> f64 {
    match b {
        Bound::Fixed => 0.0,
        Bound::Range { lo, hi } => x.clamp(lo, hi),
    }
}

/// `ln` of the birth acceptance ratio for adding `h` to `base`.
fn birth_log_ratio(
    base: &SurfaceParams,
    h: &SplineComponent,
    cell: &CellData,
    noise_var: f64,
    q: &InteractionProposal,
    prior: &PriorConfig,
    state: &HierarchyParams,
) -> f64 {
    let mut with = base.clone();
    with.interaction = Some(*h);
    let dll = -0.5 * (cell_sse(&with, cell) - cell_sse(base, cell)) / noise_var;
    dll + interaction_log_prior(h, prior, state.domain) - q.ln_density(h) + state.pi.ln() - (1.0 - state.pi).ln()
}

/// Birth or death of the interaction in cell `(i, j)`, whichever applies.
/// Returns whether the move was accepted.
pub fn rjmcmc_cell_move<R: Rng + ?Sized>(
    state: &mut HierarchyParams,
    data: &Dataset,
    prior: &PriorConfig,
    rng: &mut R,
    i: usize,
    j: usize,
    counters: &mut RjCounters,
) -> Result<bool> {
    let range = state.domain.interaction_max();
    let noise_var = state.noise_var(i, j);
    let cell = data.cell(i, j);
    let mut base = state.cell(i, j).clone();
    let current = base.interaction.take();
    let q = InteractionProposal::build(&base, cell, noise_var, prior, range);

    let (log_ratio, birth) = match current {
        None => {
            counters.birth_attempts += 1;
            let h = q.sample(rng)?;
            if check_knots(h.knots[0], h.knots[1], range).is_err() {
                return Ok(false);
            }
            (birth_log_ratio(&base, &h, cell, noise_var, &q, prior, state), Some(h))
        }
        Some(h) => {
            counters.death_attempts += 1;
            (-birth_log_ratio(&base, &h, cell, noise_var, &q, prior, state), None)
        }
    };
    if log_ratio.is_nan() {
        return Err(Error::Numerical(format!(
            "interaction move in cell ({}, {}) produced a NaN ratio",
            i + 1,
            j + 1
        )));
    }
    let accepted = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
    if accepted {
        match birth {
            Some(_) => counters.birth_accepts += 1,
            None => counters.death_accepts += 1,
        }
        state.cell_mut(i, j).interaction = birth;
    }
    Ok(accepted)
}

/// With probability `rate`, attempts one birth/death move in a uniformly
/// chosen cell.
pub fn rjmcmc_interaction_move<R: Rng + ?Sized>(
    state: &mut HierarchyParams,
    data: &Dataset,
    prior: &PriorConfig,
    rng: &mut R,
    rate: f64,
    counters: &mut RjCounters,
) -> Result<()> {
    if rate < 1.0 && rng.random::<f64>() >= rate {
        return Ok(());
    }
    let k = rng.random_range(0..state.cells.len());
    let (i, j) = state.dims.split(k);
    rjmcmc_cell_move(state, data, prior, rng, i, j, counters)?;
    Ok(())
}
