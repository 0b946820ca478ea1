use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inference::{require_draws, EvalGrid};
use crate::model::HierarchyParams;
use crate::stats::Summary;

/// Risk parameters of one (particle, outcome) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRisk {
    pub particle: usize,
    pub outcome: usize,
    /// First dose knot: the end of the flat no-effect region.
    pub maximal_safe_dose: Summary,
    pub maximal_safe_time: Summary,
    /// Middle-segment slopes of the dose and time components.
    pub overall_dose_slope: Summary,
    pub overall_time_slope: Summary,
    /// Maximum of the surface over the evaluation grid.
    pub maximal_response: Summary,
    pub inclusion_probability: f64,
    /// `min(phi1, chi1 / t)` at each time of the grid, with `chi1 / t`
    /// dropped for draws without interaction.
    pub conditional_safe_dose: Vec<(f64, Summary)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSummary {
    pub cells: Vec<CellRisk>,
}

impl RiskSummary {
    pub fn cell(&self, particle: usize, outcome: usize) -> Option<&CellRisk> {
        self.cells.iter().find(|c| c.particle == particle && c.outcome == outcome)
    }
}

/// Per-draw conditional maximal safe dose at time `t`.
pub(crate) fn conditional_safe_dose(phi1: f64, chi1: Option<f64>, t: f64) -> f64 {
    match chi1 {
        Some(c) if t > 0.0 => phi1.min(c / t),
        _ => phi1,
    }
}

pub fn risk_parameters(draws: &[HierarchyParams], grid: &EvalGrid) -> Result<RiskSummary> {
    let first = require_draws(draws)?;
    grid.validate(first.domain)?;
    let dims = first.dims;
    let n = draws.len();
    let mut cells = Vec::with_capacity(dims.cells());
    for i in 0..dims.particles {
        for j in 0..dims.outcomes {
            let mut phi1 = Vec::with_capacity(n);
            let mut psi1 = Vec::with_capacity(n);
            let mut dslope = Vec::with_capacity(n);
            let mut tslope = Vec::with_capacity(n);
            let mut maxr = Vec::with_capacity(n);
            let mut chi1 = Vec::with_capacity(n);
            let mut included = 0usize;
            for d in draws {
                let c = d.cell(i, j);
                phi1.push(c.dose.knots[0]);
                psi1.push(c.time.knots[0]);
                dslope.push(c.dose.middle_slope());
                tslope.push(c.time.middle_slope());
                let mut best = f64::NEG_INFINITY;
                for &dd in &grid.doses {
                    for &tt in &grid.times {
                        best = best.max(c.value(dd, tt));
                    }
                }
                maxr.push(best);
                let h = c.interaction.as_ref().map(|h| h.knots[0]);
                included += h.is_some() as usize;
                chi1.push(h);
            }
            let conditional_safe_dose = grid
                .times
                .iter()
                .map(|&t| {
                    let xs: Vec<f64> = phi1
                        .iter()
                        .zip(&chi1)
                        .map(|(&p, &c)| conditional_safe_dose(p, c, t))
                        .collect();
                    (t, Summary::of(&xs))
                })
                .collect();
            cells.push(CellRisk {
                particle: i,
                outcome: j,
                maximal_safe_dose: Summary::of(&phi1),
                maximal_safe_time: Summary::of(&psi1),
                overall_dose_slope: Summary::of(&dslope),
                overall_time_slope: Summary::of(&tslope),
                maximal_response: Summary::of(&maxr),
                inclusion_probability: included as f64 / n as f64,
                conditional_safe_dose,
            });
        }
    }
    Ok(RiskSummary { cells })
}
