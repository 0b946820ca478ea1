//! Scalar log-densities shared by the prior, the sampler and the proposals.

use std::f64::consts::PI;

use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let r = x - mean;
    -0.5 * (r * r / var) - 0.5 * var.ln() - HALF_LN_2PI
}

/// Gamma density with shape/rate parameterisation; `-inf` off the support.
pub fn gamma_logpdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `ln Phi(z)`, accurate far into the lower tail.
pub fn ln_std_normal_cdf(z: f64) -> f64 {
    if z > -30.0 {
        std_normal_cdf(z).ln()
    } else {
        let z2 = z * z;
        -0.5 * z2 - (-z).ln() - 0.5 * (2.0 * PI).ln() + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
    }
}

/// `ln P(lo < X < hi)` for `X ~ N(mean, var)`.
pub fn ln_normal_mass(mean: f64, var: f64, lo: f64, hi: f64) -> f64 {
    let sd = var.sqrt();
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    if b == f64::INFINITY {
        return ln_std_normal_cdf(-a);
    }
    if a == f64::NEG_INFINITY {
        return ln_std_normal_cdf(b);
    }
    // work in the tail that keeps precision
    if a > 0.0 {
        let (la, lb) = (ln_std_normal_cdf(-a), ln_std_normal_cdf(-b));
        la + (-(lb - la).exp()).ln_1p()
    } else if b < 0.0 {
        let (lb, la) = (ln_std_normal_cdf(b), ln_std_normal_cdf(a));
        lb + (-(la - lb).exp()).ln_1p()
    } else {
        (1.0 - std_normal_cdf(a) - std_normal_cdf(-b)).ln()
    }
}

/// Normalised truncated-normal log-density on `(lo, hi)`.
pub fn truncnorm_logpdf(x: f64, mean: f64, var: f64, lo: f64, hi: f64) -> f64 {
    if !(x >= lo && x <= hi) {
        return f64::NEG_INFINITY;
    }
    normal_logpdf(x, mean, var) - ln_normal_mass(mean, var, lo, hi)
}

/// Generalised bivariate Beta density on `0 < x1 < x2 < m`: a scaled
/// `Beta(a1, b1)` for the first coordinate times a `Beta(a2, b2)` on the
/// remaining interval `(x1, m)` for the second.
///
/// Returns `-inf` off the support so that Metropolis ratios reject naturally.
pub fn bivariate_beta_logpdf(x1: f64, x2: f64, a1: f64, b1: f64, a2: f64, b2: f64, m: f64) -> f64 {
    if !(0.0 < x1 && x1 < x2 && x2 < m) {
        return f64::NEG_INFINITY;
    }
    let rest = m - x1;
    -ln_beta(a1, b1) + (a1 - 1.0) * x1.ln() + (b1 - 1.0) * rest.ln() - (a1 + b1 - 1.0) * m.ln()
        - ln_beta(a2, b2)
        + (a2 - 1.0) * (x2 - x1).ln()
        + (b2 - 1.0) * (m - x2).ln()
        - (a2 + b2 - 1.0) * rest.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_bivariate_beta() {
        // with all shapes 1 on m = 1, p(x1, x2) = 1 / (1 - x1)
        let lp = bivariate_beta_logpdf(0.5, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0);
        assert!((lp - std::f64::consts::LN_2).abs() < 1e-14);
        let lp = bivariate_beta_logpdf(0.2, 0.9, 1.0, 1.0, 1.0, 1.0, 1.0);
        assert!((lp + 0.8f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn bivariate_beta_off_support() {
        for (x1, x2) in [(0.0, 0.5), (0.5, 0.4), (0.5, 1.0), (-0.1, 0.3)] {
            assert_eq!(
                bivariate_beta_logpdf(x1, x2, 2.0, 3.0, 1.0, 1.0, 1.0),
                f64::NEG_INFINITY
            );
        }
    }

    #[test]
    fn first_knot_marginal_closed_form() {
        // a1 = 1, b1 = lambda: marginal lambda (m - x)^(lambda - 1) / m^lambda,
        // obtained by integrating x2 out of the uniform conditional
        let (lam, m) = (2.7, 4.0);
        for &x1 in &[0.3, 1.7, 3.2] {
            let n = 4000;
            let h = (m - x1) / n as f64;
            let integral: f64 = (0..n)
                .map(|k| {
                    let x2 = x1 + (k as f64 + 0.5) * h;
                    bivariate_beta_logpdf(x1, x2, 1.0, lam, 1.0, 1.0, m).exp() * h
                })
                .sum();
            let closed = lam * (m - x1).powf(lam - 1.0) / m.powf(lam);
            assert!((integral - closed).abs() < 1e-10 * closed.max(1.0), "{integral} {closed}");
        }
    }

    #[test]
    fn bivariate_beta_scale_jacobian() {
        let lp = bivariate_beta_logpdf(0.3, 0.7, 1.0, 2.5, 3.0, 1.0, 1.0);
        let c: f64 = 17.0;
        let lc = bivariate_beta_logpdf(0.3 * c, 0.7 * c, 1.0, 2.5, 3.0, 1.0, c);
        assert!((lc - (lp - 2.0 * c.ln())).abs() < 1e-12);
    }

    #[test]
    fn normal_mass_tails() {
        assert!((ln_normal_mass(0.0, 1.0, 0.0, f64::INFINITY) - 0.5f64.ln()).abs() < 1e-15);
        // P(Z > 40) = exp(-800) * ... ; compare against asymptotic series
        let l = ln_normal_mass(0.0, 1.0, 40.0, f64::INFINITY);
        assert!((l - (-800.0 - 40f64.ln() - 0.5 * (2.0 * PI).ln())).abs() < 1e-3);
        let two_sided = ln_normal_mass(1.0, 4.0, -1.0, 3.0).exp();
        assert!((two_sided - 0.682_689_492_137_085_9).abs() < 1e-12, "{two_sided}");
        let far = ln_normal_mass(0.0, 1.0, 8.0, 9.0).exp();
        assert!((far / 6.219_831_985_865_787e-16 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gamma_logpdf_matches_exponential() {
        assert!((gamma_logpdf(2.0, 1.0, 0.5) - (0.5f64.ln() - 1.0)).abs() < 1e-14);
        assert_eq!(gamma_logpdf(0.0, 2.0, 1.0), f64::NEG_INFINITY);
    }
}
