use crate::basis::SurfaceParams;
use crate::error::{Error, Result};
use crate::model::dataset::{CellData, Dataset};
use crate::model::density::normal_logpdf;
use crate::model::params::HierarchyParams;
use crate::model::prior::{log_prior, PriorConfig};

/// Sum of squared residuals of one cell under `surface`.
pub fn cell_sse(surface: &SurfaceParams, cell: &CellData) -> f64 {
    cell.dose
        .iter()
        .zip(&cell.time)
        .zip(&cell.y)
        .map(|((&d, &t), &y)| {
            let r = y - surface.value(d, t);
            r * r
        })
        .sum()
}

/// Normal log-likelihood of one cell with error variance `var`.
pub fn cell_log_likelihood(surface: &SurfaceParams, cell: &CellData, var: f64) -> f64 {
    let n = cell.len() as f64;
    -0.5 * cell_sse(surface, cell) / var - 0.5 * n * (2.0 * std::f64::consts::PI * var).ln()
}

/// Normal log-likelihood of every record with mean given by the cell's
/// surface and variance `sigma2_eps[j] / tau[i]`.
pub fn log_likelihood(state: &HierarchyParams, data: &Dataset) -> Result<f64> {
    if state.dims.particles != data.dims().particles || state.dims.outcomes != data.dims().outcomes {
        return Err(Error::Config(format!(
            "state dims {:?} do not match data dims {:?}",
            state.dims,
            data.dims()
        )));
    }
    let mut total = 0.0;
    for r in data.records() {
        let mean = state.cell(r.particle, r.outcome).value(r.dose, r.time);
        let lp = normal_logpdf(r.y, mean, state.noise_var(r.particle, r.outcome));
        if !lp.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite log-likelihood at (i, j, k, d, t) = ({}, {}, {}, {}, {})",
                r.particle + 1,
                r.outcome + 1,
                r.replicate + 1,
                r.dose,
                r.time
            )));
        }
        total += lp;
    }
    Ok(total)
}

pub fn log_posterior(state: &HierarchyParams, data: &Dataset, prior: &PriorConfig) -> Result<f64> {
    Ok(log_likelihood(state, data)? + log_prior(state, prior))
}
