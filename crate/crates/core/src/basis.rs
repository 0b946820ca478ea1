//! Degree-1 B-spline basis with two interior knots.
//!
//! A component lives on `[0, m]` and is represented by its values at the
//! augmented grid `{0, knot1, knot2, m}`; the basis functions are the hat
//! functions of that grid, so coefficients are function values and every
//! sign constraint acts on a single coordinate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Knots closer than this fraction of the domain are treated as degenerate.
pub const MIN_KNOT_GAP: f64 = 1e-9;

/// Checks `0 < knot1 < knot2 < m` with the degeneracy gap applied.
pub fn check_knots(knot1: f64, knot2: f64, m: f64) -> Result<()> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::domain("m", m, "domain bound must be positive and finite"));
    }
    let gap = MIN_KNOT_GAP * m;
    if !(knot1.is_finite() && knot1 >= gap) {
        return Err(Error::domain("knot1", knot1, format!("must lie in (0, {m})")));
    }
    if !(knot2.is_finite() && knot2 <= m - gap) {
        return Err(Error::domain("knot2", knot2, format!("must lie in (0, {m})")));
    }
    if knot2 - knot1 < gap {
        return Err(Error::domain(
            "knot2",
            knot2,
            format!("must exceed knot1 = {knot1} by at least {gap:e}"),
        ));
    }
    Ok(())
}

fn check_x(x: f64, m: f64) -> Result<()> {
    if !(0.0..=m).contains(&x) {
        return Err(Error::domain("x", x, format!("must lie in [0, {m}]")));
    }
    Ok(())
}

/// Hat-function weights of `x` on the grid `{0, knot1, knot2, m}`.
pub fn spline_basis(x: f64, knot1: f64, knot2: f64, m: f64) -> Result<[f64; 4]> {
    check_knots(knot1, knot2, m)?;
    check_x(x, m)?;
    let (seg, w) = locate(x, knot1, knot2, m);
    let mut out = [0.0; 4];
    out[seg] = 1.0 - w;
    out[seg + 1] += w;
    Ok(out)
}

/// Segment index `s` and weight `w` such that the basis is
/// `(1 - w) e_s + w e_{s+1}`. Assumes validated inputs.
#[inline]
pub(crate) fn locate(x: f64, knot1: f64, knot2: f64, m: f64) -> (usize, f64) {
    if x <= knot1 {
        (0, x / knot1)
    } else if x <= knot2 {
        (1, (x - knot1) / (knot2 - knot1))
    } else {
        (2, ((x - knot2) / (m - knot2)).min(1.0))
    }
}

/// One additive effect: dose (`f`), time (`g`) or dose-time interaction (`h`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplineComponent {
    pub knots: [f64; 2],
    pub coef: [f64; 4],
    pub domain_max: f64,
}

impl SplineComponent {
    pub fn new(knots: [f64; 2], coef: [f64; 4], domain_max: f64) -> Result<Self> {
        check_knots(knots[0], knots[1], domain_max)?;
        if coef[0] != 0.0 {
            return Err(Error::domain("coef[1]", coef[0], "first coefficient is pinned to 0"));
        }
        if let Some(c) = coef.iter().find(|c| !c.is_finite()) {
            return Err(Error::domain("coef", *c, "coefficients must be finite"));
        }
        Ok(Self {
            knots,
            coef,
            domain_max,
        })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        check_knots(self.knots[0], self.knots[1], self.domain_max)?;
        check_x(x, self.domain_max)?;
        Ok(self.value(x))
    }

    /// Evaluation without validation, for hot loops over checked state.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let (seg, w) = locate(x, self.knots[0], self.knots[1], self.domain_max);
        let lo = self.coef[seg];
        lo + w * (self.coef[seg + 1] - lo)
    }

    /// Hat weights at `x`, unchecked.
    #[inline]
    pub fn basis(&self, x: f64) -> [f64; 4] {
        let (seg, w) = locate(x, self.knots[0], self.knots[1], self.domain_max);
        let mut out = [0.0; 4];
        out[seg] = 1.0 - w;
        out[seg + 1] += w;
        out
    }

    /// Slope on `(knot1, knot2)`.
    pub fn middle_slope(&self) -> f64 {
        (self.coef[2] - self.coef[1]) / (self.knots[1] - self.knots[0])
    }

    /// Largest absolute slope over the three linear pieces.
    pub fn max_abs_slope(&self) -> f64 {
        let grid = self.grid();
        (0..3)
            .map(|s| ((self.coef[s + 1] - self.coef[s]) / (grid[s + 1] - grid[s])).abs())
            .fold(0.0, f64::max)
    }

    /// The augmented grid `{0, knot1, knot2, m}`.
    pub fn grid(&self) -> [f64; 4] {
        [0.0, self.knots[0], self.knots[1], self.domain_max]
    }
}

pub fn eval_component(x: f64, comp: &SplineComponent) -> Result<f64> {
    comp.eval(x)
}

/// Per-(particle, outcome) surface `alpha + f(d) + g(t) [+ h(d t)]`.
///
/// The interaction component is present exactly when the inclusion
/// indicator is one; there is no separate flag to fall out of sync.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceParams {
    pub alpha: f64,
    pub dose: SplineComponent,
    pub time: SplineComponent,
    pub interaction: Option<SplineComponent>,
}

impl SurfaceParams {
    pub fn rho(&self) -> bool {
        self.interaction.is_some()
    }

    #[inline]
    pub fn value(&self, d: f64, t: f64) -> f64 {
        let mut m = self.alpha + self.dose.value(d) + self.time.value(t);
        if let Some(h) = &self.interaction {
            m += h.value(d * t);
        }
        m
    }

    pub fn eval(&self, d: f64, t: f64) -> Result<f64> {
        let mut m = self.alpha + self.dose.eval(d)? + self.time.eval(t)?;
        if let Some(h) = &self.interaction {
            m += h.eval(d * t)?;
        }
        Ok(m)
    }
}

pub fn eval_surface(d: f64, t: f64, p: &SurfaceParams) -> Result<f64> {
    p.eval(d, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Straight-line interpolation through the four grid points.
    fn interp_oracle(x: f64, c: &SplineComponent) -> f64 {
        let xs = [0.0, c.knots[0], c.knots[1], c.domain_max];
        for s in 0..3 {
            if x >= xs[s] && x <= xs[s + 1] {
                let t = (x - xs[s]) / (xs[s + 1] - xs[s]);
                return c.coef[s] * (1.0 - t) + c.coef[s + 1] * t;
            }
        }
        unreachable!()
    }

    fn comp(k1: f64, k2: f64, c: [f64; 4], m: f64) -> SplineComponent {
        SplineComponent::new([k1, k2], c, m).unwrap()
    }

    #[test]
    fn basis_at_grid_points() {
        assert_eq!(spline_basis(0.0, 1.0, 2.0, 10.0).unwrap(), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(spline_basis(1.0, 1.0, 2.0, 10.0).unwrap(), [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(spline_basis(2.0, 1.0, 2.0, 10.0).unwrap(), [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(spline_basis(10.0, 1.0, 2.0, 10.0).unwrap(), [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn basis_between_knots() {
        let b = spline_basis(1.5, 1.0, 2.0, 10.0).unwrap();
        assert_eq!(b, [0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn basis_rejects_bad_input() {
        let err = spline_basis(11.0, 1.0, 2.0, 10.0).unwrap_err();
        assert!(err.to_string().contains("x = 11"), "{err}");
        let err = spline_basis(1.0, 2.0, 1.0, 10.0).unwrap_err();
        assert!(err.to_string().contains("knot2"), "{err}");
        assert!(spline_basis(-0.1, 1.0, 2.0, 10.0).is_err());
        assert!(spline_basis(1.0, 0.0, 2.0, 10.0).is_err());
        assert!(spline_basis(1.0, 1.0, 10.0, 10.0).is_err());
        // coincident knots are degenerate, not merged
        assert!(spline_basis(1.0, 1.0, 1.0 + 1e-12, 10.0).is_err());
    }

    #[test]
    fn component_vanishes_at_zero_and_interpolates_knots() {
        let c = comp(1.0, 4.0, [0.0, -0.5, 2.0, 3.0], 10.0);
        assert_eq!(c.eval(0.0).unwrap(), 0.0);
        assert_eq!(c.eval(1.0).unwrap(), -0.5);
        assert_eq!(c.eval(4.0).unwrap(), 2.0);
        assert_eq!(c.eval(10.0).unwrap(), 3.0);
        let c = comp(1.0, 4.0, [0.0, 0.0, 1.7, 3.0], 10.0);
        assert_eq!(c.eval(4.0).unwrap(), 1.7);
    }

    #[test]
    fn component_rejects_nonzero_first_coef() {
        assert!(SplineComponent::new([1.0, 2.0], [0.1, 0.0, 1.0, 1.0], 10.0).is_err());
    }

    #[test]
    fn pinned_second_coef_is_flat_before_first_knot() {
        let c = comp(3.0, 6.0, [0.0, 0.0, 2.0, 1.0], 10.0);
        for k in 0..=30 {
            assert_eq!(c.eval(k as f64 * 0.1).unwrap(), 0.0);
        }
        assert!((c.middle_slope() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn surface_at_origin_is_alpha() {
        let p = SurfaceParams {
            alpha: -1.25,
            dose: comp(1.0, 2.0, [0.0, 0.0, 1.0, 2.0], 10.0),
            time: comp(0.5, 1.0, [0.0, 0.0, 0.3, 0.2], 6.0),
            interaction: Some(comp(5.0, 30.0, [0.0, 0.0, 1.0, 4.0], 60.0)),
        };
        assert_eq!(p.eval(0.0, 0.0).unwrap(), -1.25);
        assert!(p.eval(11.0, 1.0).is_err());
    }

    #[test]
    fn additive_surface_is_separable() {
        let p = SurfaceParams {
            alpha: 0.4,
            dose: comp(2.0, 7.0, [0.0, -0.2, 1.0, 2.0], 10.0),
            time: comp(1.0, 3.0, [0.0, 0.0, 0.5, 1.5], 6.0),
            interaction: None,
        };
        for &t in &[0.5, 2.0, 5.5] {
            let base = p.eval(0.0, t).unwrap() - p.eval(0.0, 0.0).unwrap();
            for &d in &[0.0, 1.0, 4.5, 9.9] {
                let diff = p.eval(d, t).unwrap() - p.eval(d, 0.0).unwrap();
                assert!((diff - base).abs() < 1e-12);
            }
        }
    }

    fn arb_component(m: f64) -> impl Strategy<Value = SplineComponent> {
        (0.001f64..0.998, 0.0f64..1.0, -3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0).prop_map(
            move |(u1, u2, c2, c3, c4)| {
                let k1 = u1 * m;
                let k2 = k1 + (m - k1) * (0.001 + 0.998 * u2);
                SplineComponent::new([k1, k2], [0.0, c2, c3, c4], m).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn component_matches_interpolation(c in arb_component(7.5), u in 0.0f64..=1.0) {
            let x = u * c.domain_max;
            let got = c.eval(x).unwrap();
            prop_assert!((got - interp_oracle(x, &c)).abs() <= 1e-12);
        }

        #[test]
        fn partition_of_unity(c in arb_component(3.0), u in 0.0f64..=1.0) {
            let x = u * c.domain_max;
            let b = spline_basis(x, c.knots[0], c.knots[1], c.domain_max).unwrap();
            prop_assert!(b.iter().all(|&w| w >= 0.0));
            prop_assert!(b.iter().filter(|&&w| w > 0.0).count() <= 2);
            prop_assert!((b.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn lipschitz_in_x(c in arb_component(10.0), u in 0.0f64..0.99, eps in 1e-6f64..0.1) {
            let x = u * c.domain_max;
            let x2 = (x + eps).min(c.domain_max);
            let step = (c.eval(x2).unwrap() - c.eval(x).unwrap()).abs();
            prop_assert!(step <= c.max_abs_slope() * (x2 - x) * (1.0 + 1e-9) + 1e-12);
        }

        #[test]
        fn interacting_surface_is_sum_of_parts(
            f in arb_component(10.0), g in arb_component(6.0), h in arb_component(60.0),
            alpha in -5.0f64..5.0, ud in 0.0f64..=1.0, ut in 0.0f64..=1.0,
        ) {
            let p = SurfaceParams { alpha, dose: f, time: g, interaction: Some(h) };
            let (d, t) = (10.0 * ud, 6.0 * ut);
            let oracle = alpha + interp_oracle(d, &f) + interp_oracle(t, &g) + interp_oracle(d * t, &h);
            prop_assert!((p.eval(d, t).unwrap() - oracle).abs() <= 1e-12);
        }
    }
}
