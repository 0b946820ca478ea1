//! Random-walk Metropolis updates of the knot locations.
//!
//! Each knot coordinate is proposed uniformly on a window of half-width `w`
//! around its current value, intersected with the interval its ordering
//! allows. The intersection makes the proposal asymmetric near the edges;
//! the ratio of window lengths corrects for it.

use rand::Rng;

use crate::basis::check_knots;
use crate::error::Result;
use crate::model::likelihood::cell_sse;
use crate::model::prior::{BivariateBeta, ComponentKind, KnotPrior, PriorConfig};
use crate::model::{Dataset, HierarchyParams};
use crate::sampler::adapt::{family_range, BlockCounters, KnotBlock, StepWidths, FAMILIES};
use crate::sampler::gibbs::{component, component_mut};

fn knot_prior(state: &HierarchyParams, prior: &PriorConfig, i: usize, kind: ComponentKind) -> BivariateBeta {
    match kind {
        ComponentKind::Dose => BivariateBeta::from_rates(state.particles[i].lambda_phi),
        ComponentKind::Time => BivariateBeta::from_rates(state.particles[i].lambda_psi),
        ComponentKind::Interaction => BivariateBeta { shape: prior.chi_shape },
    }
}

/// Length of `(x - w, x + w)` intersected with `(lo, hi)`.
fn window_len(x: f64, w: f64, lo: f64, hi: f64) -> f64 {
    (x + w).min(hi) - (x - w).max(lo)
}

/// One Metropolis step on a single knot coordinate. Returns whether the
/// proposal was accepted; a block whose component is absent is skipped and
/// returns `None`.
pub fn update_knot<R: Rng + ?Sized>(
    state: &mut HierarchyParams,
    data: &Dataset,
    prior: &PriorConfig,
    rng: &mut R,
    block: KnotBlock,
    width: f64,
) -> Result<Option<bool>> {
    let (i, j) = state.dims.split(block.cell);
    let Some(comp) = component(state, i, j, block.family).copied() else {
        return Ok(None);
    };
    let m = family_range(block.family, state.domain);
    let (lo, hi) = match block.coord {
        0 => (0.0, comp.knots[1]),
        _ => (comp.knots[0], m),
    };
    let cur = comp.knots[block.coord];
    let a = (cur - width).max(lo);
    let b = (cur + width).min(hi);
    let prop = a + (b - a) * rng.random::<f64>();
    let mut knots = comp.knots;
    knots[block.coord] = prop;
    if check_knots(knots[0], knots[1], m).is_err() {
        return Ok(Some(false));
    }

    let kp = knot_prior(state, prior, i, block.family);
    let w = 1.0 / state.noise_var(i, j);
    let cell = data.cell(i, j);
    let old_lp = -0.5 * w * cell_sse(state.cell(i, j), cell) + kp.ln_density(comp.knots, m);
    let mut proposed = state.cell(i, j).clone();
    match block.family {
        ComponentKind::Dose => proposed.dose.knots = knots,
        ComponentKind::Time => proposed.time.knots = knots,
        ComponentKind::Interaction => proposed.interaction.as_mut().expect("present").knots = knots,
    }
    let new_lp = -0.5 * w * cell_sse(&proposed, cell) + kp.ln_density(knots, m);
    let log_ratio = new_lp - old_lp + (b - a).ln() - window_len(prop, width, lo, hi).ln();
    let accepted = log_ratio.is_finite() && (log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio);
    if accepted {
        component_mut(state, i, j, block.family).expect("present").knots = knots;
    }
    Ok(Some(accepted))
}

/// Sweeps every knot coordinate of every present component once.
pub fn mh_update_knots<R: Rng + ?Sized>(
    state: &mut HierarchyParams,
    data: &Dataset,
    prior: &PriorConfig,
    rng: &mut R,
    widths: &StepWidths,
    counters: &mut BlockCounters,
) -> Result<()> {
    for cell in 0..state.cells.len() {
        for family in FAMILIES {
            for coord in 0..2 {
                let block = KnotBlock { cell, family, coord };
                if let Some(acc) = update_knot(state, data, prior, rng, block, widths.get(block))? {
                    counters.record(block, acc);
                }
            }
        }
    }
    Ok(())
}
