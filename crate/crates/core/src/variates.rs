//! Random variate generators used by the prior sampler and the MCMC kernels.

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1, Gamma, StandardNormal};
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist};

use crate::basis::check_knots;
use crate::error::{Error, Result};
use crate::model::density::std_normal_cdf;

/// Rejection loops give up after this many proposals.
pub const RETRY_BUDGET: usize = 10_000;

pub fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + sd * z
}

/// `Gamma(shape, rate)` with `E[x] = shape / rate`.
pub fn gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Result<f64> {
    let g = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::Numerical(format!("Gamma({shape}, {rate}): {e}")))?;
    Ok(g.sample(rng))
}

/// Variance whose precision is `Gamma(shape, rate)`. Draws whose precision
/// or variance is not a normal positive float are redrawn.
pub fn precision_variance<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Result<f64> {
    for _ in 0..RETRY_BUDGET {
        let prec = gamma(rng, shape, rate)?;
        let var = 1.0 / prec;
        if prec.is_normal() && var.is_normal() {
            return Ok(var);
        }
    }
    Err(Error::Numerical(format!(
        "Gamma({shape}, {rate}) precision draw kept under/overflowing"
    )))
}

pub fn beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<f64> {
    let d = Beta::new(a, b).map_err(|e| Error::Numerical(format!("Beta({a}, {b}): {e}")))?;
    Ok(d.sample(rng))
}

/// `N(mean, sd^2)` restricted to `(lo, hi)`; either bound may be infinite.
///
/// Inside the bulk this is plain or uniform rejection; in the far tails it
/// switches to the translated-exponential envelope.
pub fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) || lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::Numerical(format!(
            "truncated normal N({mean}, {sd}^2) on ({lo}, {hi}) is ill-posed"
        )));
    }
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    let z = if a >= 0.0 {
        std_tail(rng, a, b)?
    } else if b <= 0.0 {
        -std_tail(rng, -b, -a)?
    } else {
        std_straddle(rng, a, b)?
    };
    Ok((mean + sd * z).clamp(lo, hi))
}

fn budget_exhausted(a: f64, b: f64) -> Error {
    Error::Numerical(format!(
        "truncated normal on standardised ({a}, {b}) exceeded {RETRY_BUDGET} proposals"
    ))
}

/// Standard normal on `(a, b)` with `a < 0 < b`.
fn std_straddle<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<f64> {
    let mass = std_normal_cdf(b) - std_normal_cdf(a);
    for _ in 0..RETRY_BUDGET {
        let z = if mass >= 0.25 {
            let z: f64 = StandardNormal.sample(rng);
            if z <= a || z >= b {
                continue;
            }
            z
        } else {
            let z = rng.random_range(a..b);
            if rng.random::<f64>() >= (-0.5 * z * z).exp() {
                continue;
            }
            z
        };
        return Ok(z);
    }
    Err(budget_exhausted(a, b))
}

/// Standard normal on `(a, b)` with `0 <= a`.
fn std_tail<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<f64> {
    let width = b - a;
    for _ in 0..RETRY_BUDGET {
        if width < 0.5 || width * a < 1.0 && width.is_finite() && width < 2.0 {
            // density ratio against the left edge
            let z = a + width * rng.random::<f64>();
            if z > a && z < b && rng.random::<f64>() < (0.5 * (a * a - z * z)).exp() {
                return Ok(z);
            }
        } else if a < 0.6 {
            let z: f64 = StandardNormal.sample(rng);
            if z > a && z < b {
                return Ok(z);
            }
        } else {
            let rate = 0.5 * (a + (a * a + 4.0).sqrt());
            let e: f64 = Exp1.sample(rng);
            let z = a + e / rate;
            if z < b && rng.random::<f64>() < (-0.5 * (z - rate) * (z - rate)).exp() {
                return Ok(z);
            }
        }
    }
    Err(budget_exhausted(a, b))
}

/// `Gamma(shape, rate)` restricted to `(lo, hi)`.
pub fn truncated_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64, lo: f64, hi: f64) -> Result<f64> {
    let lo = lo.max(0.0);
    let dist = GammaDist::new(shape, rate)
        .map_err(|e| Error::Numerical(format!("Gamma({shape}, {rate}): {e}")))?;
    if lo >= hi {
        return Err(Error::Numerical(format!("truncated Gamma on empty ({lo}, {hi})")));
    }
    let (f_lo, f_hi) = (dist.cdf(lo), if hi.is_finite() { dist.cdf(hi) } else { 1.0 });
    let mass = f_hi - f_lo;
    if mass > 0.3 {
        for _ in 0..RETRY_BUDGET {
            let x = gamma(rng, shape, rate)?;
            if x > lo && x < hi {
                return Ok(x);
            }
        }
    } else if shape >= 1.0 && lo > 0.0 && lo >= (shape - 1.0) / rate {
        // log-concave right tail: exponential envelope tangent at `lo`
        let slope = rate - (shape - 1.0) / lo;
        for _ in 0..RETRY_BUDGET {
            let e: f64 = Exp1.sample(rng);
            let x = lo + e / slope;
            if x >= hi {
                continue;
            }
            let log_acc = (shape - 1.0) * ((x / lo).ln() - (x - lo) / lo);
            if rng.random::<f64>().ln() < log_acc {
                return Ok(x);
            }
        }
    } else if mass > 0.0 {
        let u = f_lo + rng.random::<f64>() * mass;
        let x = dist.inverse_cdf(u);
        if x.is_finite() {
            return Ok(x.clamp(lo, hi));
        }
    }
    Err(Error::Numerical(format!(
        "truncated Gamma({shape}, {rate}) on ({lo}, {hi}) could not be sampled"
    )))
}

/// Draw `(x1, x2)` from the generalised bivariate Beta on `0 < x1 < x2 < m`.
pub fn bivariate_beta<R: Rng + ?Sized>(rng: &mut R, shape: [f64; 4], m: f64) -> Result<[f64; 2]> {
    let [a1, b1, a2, b2] = shape;
    for _ in 0..RETRY_BUDGET {
        let x1 = m * beta(rng, a1, b1)?;
        let x2 = x1 + (m - x1) * beta(rng, a2, b2)?;
        if check_knots(x1, x2, m).is_ok() {
            return Ok([x1, x2]);
        }
    }
    Err(Error::Numerical(format!(
        "knot pair from B2({a1}, {b1}, {a2}, {b2}, {m}) kept landing on the boundary"
    )))
}
