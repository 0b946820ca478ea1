use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inference::{require_draws, EvalGrid};
use crate::model::HierarchyParams;
use crate::stats::{mean, quantile_sorted, sorted, variance};

/// `Phi^-1(0.975)`.
const Z975: f64 = 1.959_963_984_540_054;

/// Pointwise summaries of a curve or surface over evaluation points, with
/// pointwise and simultaneous 95% bands.
///
/// The pointwise band is `mean +- 1.96 sd`; the simultaneous band is
/// `mean +- M sd`, where `M` is the 95% quantile over draws of the largest
/// standardised deviation across the points (never below 1.96, so the
/// simultaneous band always contains the pointwise one).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Band {
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub q025: Vec<f64>,
    pub q975: Vec<f64>,
    pub sd: Vec<f64>,
    pub pointwise_lower: Vec<f64>,
    pub pointwise_upper: Vec<f64>,
    pub simultaneous_lower: Vec<f64>,
    pub simultaneous_upper: Vec<f64>,
    pub multiplier: f64,
}

impl Band {
    /// `eval(draw, point)` for `n_draws` draws at `n_points` points. Values
    /// are recomputed in a second pass instead of being stored.
    fn compute(n_draws: usize, n_points: usize, eval: impl Fn(usize, usize) -> f64) -> Self {
        let mut b = Band::default();
        let mut column = vec![0.0; n_draws];
        for p in 0..n_points {
            for (n, v) in column.iter_mut().enumerate() {
                *v = eval(n, p);
            }
            let s = sorted(&column);
            b.mean.push(mean(&column));
            b.median.push(quantile_sorted(&s, 0.5));
            b.q025.push(quantile_sorted(&s, 0.025));
            b.q975.push(quantile_sorted(&s, 0.975));
            b.sd.push(variance(&column).sqrt());
        }
        let mut max_dev = vec![0.0f64; n_draws];
        for p in 0..n_points {
            let (m, sd) = (b.mean[p], b.sd[p]);
            if !(sd > 0.0) {
                continue;
            }
            for (n, md) in max_dev.iter_mut().enumerate() {
                *md = md.max((eval(n, p) - m).abs() / sd);
            }
        }
        b.multiplier = quantile_sorted(&sorted(&max_dev), 0.95).max(Z975);
        for p in 0..n_points {
            let (m, sd) = (b.mean[p], b.sd[p]);
            b.pointwise_lower.push(m - Z975 * sd);
            b.pointwise_upper.push(m + Z975 * sd);
            b.simultaneous_lower.push(m - b.multiplier * sd);
            b.simultaneous_upper.push(m + b.multiplier * sd);
        }
        b
    }
}

/// Surface and component summaries of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSurface {
    pub particle: usize,
    pub outcome: usize,
    /// Row-major over (dose, time) of the grid.
    pub surface: Band,
    /// `f` at the grid doses.
    pub dose_curve: Band,
    /// `g` at the grid times.
    pub time_curve: Band,
    /// Evaluation points of the interaction curve, spanning `[0, D T]`.
    pub interaction_points: Vec<f64>,
    /// `h`, counted as zero in draws without interaction.
    pub interaction_curve: Band,
}

pub fn surface_summary(draws: &[HierarchyParams], grid: &EvalGrid) -> Result<Vec<CellSurface>> {
    let first = require_draws(draws)?;
    grid.validate(first.domain)?;
    let dims = first.dims;
    let nt = grid.times.len();
    let dt = first.domain.interaction_max();
    let np = grid.doses.len().max(2);
    let hx: Vec<f64> = (0..np).map(|k| dt * k as f64 / (np - 1) as f64).collect();
    let n = draws.len();
    let mut out = Vec::with_capacity(dims.cells());
    for i in 0..dims.particles {
        for j in 0..dims.outcomes {
            let c = |n: usize| draws[n].cell(i, j);
            let surface = Band::compute(n, grid.doses.len() * nt, |n, p| {
                c(n).value(grid.doses[p / nt], grid.times[p % nt])
            });
            let dose_curve = Band::compute(n, grid.doses.len(), |n, p| c(n).dose.value(grid.doses[p]));
            let time_curve = Band::compute(n, nt, |n, p| c(n).time.value(grid.times[p]));
            let interaction_curve = Band::compute(n, hx.len(), |n, p| {
                c(n).interaction.as_ref().map_or(0.0, |h| h.value(hx[p]))
            });
            out.push(CellSurface {
                particle: i,
                outcome: j,
                surface,
                dose_curve,
                time_curve,
                interaction_points: hx.clone(),
                interaction_curve,
            });
        }
    }
    Ok(out)
}

/// Posterior median of `m(d, t) - alpha` over the grid; zero marks the
/// no-effect region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureMap {
    pub particle: usize,
    pub outcome: usize,
    /// Row-major over (dose, time) of the grid.
    pub median_relative: Vec<f64>,
}

pub fn safe_exposure_map(draws: &[HierarchyParams], grid: &EvalGrid) -> Result<Vec<ExposureMap>> {
    let first = require_draws(draws)?;
    grid.validate(first.domain)?;
    let dims = first.dims;
    let mut out = Vec::with_capacity(dims.cells());
    let mut column = vec![0.0; draws.len()];
    for i in 0..dims.particles {
        for j in 0..dims.outcomes {
            let mut median_relative = Vec::with_capacity(grid.doses.len() * grid.times.len());
            for &d in &grid.doses {
                for &t in &grid.times {
                    for (v, s) in column.iter_mut().zip(draws) {
                        let c = s.cell(i, j);
                        *v = c.value(d, t) - c.alpha;
                    }
                    column.sort_by(f64::total_cmp);
                    median_relative.push(quantile_sorted(&column, 0.5));
                }
            }
            out.push(ExposureMap {
                particle: i,
                outcome: j,
                median_relative,
            });
        }
    }
    Ok(out)
}
