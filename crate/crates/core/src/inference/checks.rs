use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::require_draws;
use crate::model::density::std_normal_cdf;
use crate::model::{Dataset, HierarchyParams};
use crate::stats::{chi_square, mean, quantile_sorted, sorted};
use crate::variates;

pub const PIT_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitReport {
    /// One value per record, in dataset order.
    pub values: Vec<f64>,
    pub counts: [u64; PIT_BINS],
    pub chi_square: f64,
    pub p_value: f64,
}

/// Probability integral transform of each observation under the posterior
/// predictive: the normal CDF at `y` given each draw's surface, `sigma2_eps`
/// and `tau`, averaged over draws. Uniformity is tested with a chi-square
/// statistic on ten equal bins.
pub fn pit_diagnostic(draws: &[HierarchyParams], data: &Dataset) -> Result<PitReport> {
    require_draws(draws)?;
    if data.is_empty() {
        return Err(Error::Unavailable("PIT needs at least one observation".into()));
    }
    let mut values = Vec::with_capacity(data.len());
    for r in data.records() {
        let mut acc = 0.0;
        for s in draws {
            let m = s.cell(r.particle, r.outcome).value(r.dose, r.time);
            let sd = s.noise_var(r.particle, r.outcome).sqrt();
            acc += std_normal_cdf((r.y - m) / sd);
        }
        values.push(acc / draws.len() as f64);
    }
    let mut counts = [0u64; PIT_BINS];
    for &u in &values {
        counts[((u * PIT_BINS as f64) as usize).min(PIT_BINS - 1)] += 1;
    }
    let observed: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let expected = vec![values.len() as f64 / PIT_BINS as f64; PIT_BINS];
    let (chi_square, p_value) = chi_square(&observed, &expected, 0);
    Ok(PitReport {
        values,
        counts,
        chi_square,
        p_value,
    })
}

/// Posterior predictive check of the replicate mean at one design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveCell {
    pub particle: usize,
    pub outcome: usize,
    pub dose: f64,
    pub time: f64,
    pub replicates: usize,
    pub empirical_mean: f64,
    pub predictive_mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveReport {
    pub cells: Vec<PredictiveCell>,
}

impl PredictiveReport {
    pub fn coverage(&self) -> f64 {
        self.cells.iter().filter(|c| c.inside).count() as f64 / self.cells.len() as f64
    }
}

/// For every observed (particle, outcome, dose, time) point, simulates one
/// replicate set of the observed size per draw and reports the 95% interval
/// of the replicate mean against the observed mean.
pub fn posterior_predictive_mean_check<R: Rng + ?Sized>(
    draws: &[HierarchyParams],
    data: &Dataset,
    rng: &mut R,
) -> Result<PredictiveReport> {
    require_draws(draws)?;
    if data.is_empty() {
        return Err(Error::Unavailable("predictive check needs at least one observation".into()));
    }
    // group records by design point, keeping first-appearance order
    let mut points: Vec<(usize, usize, f64, f64, Vec<f64>)> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for r in data.records() {
        let key = (r.particle, r.outcome, r.dose.to_bits(), r.time.to_bits());
        let k = *index.entry(key).or_insert_with(|| {
            points.push((r.particle, r.outcome, r.dose, r.time, Vec::new()));
            points.len() - 1
        });
        points[k].4.push(r.y);
    }
    let mut cells = Vec::with_capacity(points.len());
    let mut reps = vec![0.0; draws.len()];
    for (i, j, d, t, ys) in points {
        let k = ys.len() as f64;
        for (v, s) in reps.iter_mut().zip(draws) {
            let m = s.cell(i, j).value(d, t);
            // the mean of k replicates is normal with variance noise / k
            *v = variates::normal(rng, m, (s.noise_var(i, j) / k).sqrt());
        }
        let sorted_reps = sorted(&reps);
        let (lower, upper) = (quantile_sorted(&sorted_reps, 0.025), quantile_sorted(&sorted_reps, 0.975));
        let empirical_mean = mean(&ys);
        cells.push(PredictiveCell {
            particle: i,
            outcome: j,
            dose: d,
            time: t,
            replicates: ys.len(),
            empirical_mean,
            predictive_mean: mean(&reps),
            lower,
            upper,
            inside: lower <= empirical_mean && empirical_mean <= upper,
        });
    }
    Ok(PredictiveReport { cells })
}
