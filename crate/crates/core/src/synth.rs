//! Synthetic screening designs with known truth, and recovery scoring.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::SplineComponent;
use crate::error::{Error, Result};
use crate::model::{Dataset, Dims, Domain, HierarchyParams, Record};
use crate::stats::{mean, quantile_sorted, sorted};
use crate::variates;

/// A ground-truth effect curve on `[0, m]`, zero at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthFn {
    /// Values `coef` at `{0, knots[0], knots[1], m}`, linear in between.
    PiecewiseLinear { knots: [f64; 2], coef: [f64; 4] },
    /// Four-parameter log-logistic `c + (d - c) / (1 + exp(b (ln x - ln h)))`,
    /// shifted to vanish at the origin.
    LogLogistic { b: f64, c: f64, d: f64, h: f64 },
    Flat,
}

impl TruthFn {
    pub fn eval(&self, x: f64, m: f64) -> f64 {
        match *self {
            TruthFn::PiecewiseLinear { knots, coef } => SplineComponent { knots, coef, domain_max: m }.value(x),
            TruthFn::LogLogistic { b, c, d, h } => {
                let f = |x: f64| c + (d - c) / (1.0 + (b * (x.ln() - h.ln())).exp());
                f(x) - f(0.0)
            }
            TruthFn::Flat => 0.0,
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, TruthFn::Flat)
    }

    /// The known change points of a piecewise-linear truth.
    pub fn knots(&self) -> Option<[f64; 2]> {
        match self {
            TruthFn::PiecewiseLinear { knots, .. } => Some(*knots),
            _ => None,
        }
    }

    fn validate(&self, m: f64) -> Result<()> {
        match *self {
            TruthFn::PiecewiseLinear { knots, coef } => SplineComponent::new(knots, coef, m).map(|_| ()),
            TruthFn::LogLogistic { b, c, d, h } => {
                if [b, c, d].iter().all(|v| v.is_finite()) && h > 0.0 && h.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("log-logistic truth needs finite b, c, d and h > 0, got {self:?}")))
                }
            }
            TruthFn::Flat => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTruth {
    pub alpha: f64,
    pub dose: TruthFn,
    pub time: TruthFn,
    /// `Flat` means the cell has no dose-time interaction.
    pub interaction: TruthFn,
}

impl CellTruth {
    pub fn value(&self, d: f64, t: f64, dom: Domain) -> f64 {
        self.alpha
            + self.dose.eval(d, dom.dose_max)
            + self.time.eval(t, dom.time_max)
            + self.interaction.eval(d * t, dom.interaction_max())
    }
}

/// Variance inflations of the particles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSpec {
    Fixed(Vec<f64>),
    /// `tau_i ~ Gamma(nu / 2, nu / 2)`, one draw per particle.
    Mixture { nu: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub doses: Vec<f64>,
    pub times: Vec<f64>,
    pub replicates: usize,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec {
    pub particles: usize,
    pub outcomes: usize,
    /// Row-major over (particle, outcome).
    pub cells: Vec<CellTruth>,
    /// Error standard deviation per outcome.
    pub sigma_eps: Vec<f64>,
    pub tau: TauSpec,
    pub design: Design,
}

impl Default for Design {
    /// Ten doses on `[0, 100]` by seven times `0..=6`, three replicates.
    fn default() -> Self {
        Self {
            doses: (0..10).map(|k| 100.0 * k as f64 / 9.0).collect(),
            times: (0..7).map(f64::from).collect(),
            replicates: 3,
            domain: Domain {
                dose_max: 100.0,
                time_max: 6.0,
            },
        }
    }
}

impl Default for TruthSpec {
    /// Two particles by two outcomes with piecewise-linear dose and time
    /// effects; cells (1, 1) and (2, 2) carry an interaction, the other two
    /// are null.
    fn default() -> Self {
        let dose = TruthFn::PiecewiseLinear {
            knots: [30.0, 70.0],
            coef: [0.0, 0.0, 2.0, 2.5],
        };
        let time = TruthFn::PiecewiseLinear {
            knots: [2.0, 4.5],
            coef: [0.0, 0.0, 1.5, 2.0],
        };
        let inter = TruthFn::PiecewiseLinear {
            knots: [150.0, 400.0],
            coef: [0.0, 0.0, 1.5, 3.0],
        };
        let cells = (0..4)
            .map(|k| CellTruth {
                alpha: -2.0,
                dose: dose.clone(),
                time: time.clone(),
                interaction: if k == 0 || k == 3 { inter.clone() } else { TruthFn::Flat },
            })
            .collect();
        Self {
            particles: 2,
            outcomes: 2,
            cells,
            sigma_eps: vec![0.3, 0.3],
            tau: TauSpec::Mixture { nu: 8 },
            design: Design::default(),
        }
    }
}

impl TruthSpec {
    pub fn dims(&self) -> Dims {
        Dims {
            particles: self.particles,
            outcomes: self.outcomes,
            replicates: self.design.replicates,
        }
    }

    pub fn cell(&self, i: usize, j: usize) -> &CellTruth {
        &self.cells[self.dims().cell(i, j)]
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        if dims.cells() == 0 || self.cells.len() != dims.cells() {
            return Err(Error::Config(format!(
                "expected {} cell truths for {}x{}, got {}",
                dims.cells(),
                self.particles,
                self.outcomes,
                self.cells.len()
            )));
        }
        if self.sigma_eps.len() != self.outcomes || self.sigma_eps.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::Config("sigma_eps needs one non-negative value per outcome".into()));
        }
        match &self.tau {
            TauSpec::Fixed(t) if t.len() != self.particles || t.iter().any(|v| !(*v > 0.0 && v.is_finite())) => {
                return Err(Error::Config("fixed tau needs one positive value per particle".into()));
            }
            TauSpec::Mixture { nu: 0 } => return Err(Error::Config("nu must be positive".into())),
            _ => {}
        }
        let dom = self.design.domain;
        for c in &self.cells {
            c.dose.validate(dom.dose_max)?;
            c.time.validate(dom.time_max)?;
            c.interaction.validate(dom.interaction_max())?;
            if !c.alpha.is_finite() {
                return Err(Error::Config("alpha truth must be finite".into()));
            }
        }
        if self.design.replicates == 0 {
            return Err(Error::Config("at least one replicate required".into()));
        }
        Ok(())
    }
}

/// The realised truth of one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub spec: TruthSpec,
    pub tau: Vec<f64>,
}

/// Simulates `y = alpha + f(d) + g(t) + h(d t) + eps` over the full design,
/// with `eps ~ N(0, sigma_j^2 / tau_i)`.
pub fn simulate_dataset(spec: &TruthSpec, seed: u64) -> Result<(Dataset, Truth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = match &spec.tau {
        TauSpec::Fixed(t) => t.clone(),
        TauSpec::Mixture { nu } => {
            let h = 0.5 * *nu as f64;
            (0..spec.particles)
                .map(|_| variates::gamma(&mut rng, h, h))
                .collect::<Result<_>>()?
        }
    };
    let dom = spec.design.domain;
    let mut records = Vec::new();
    for i in 0..spec.particles {
        for j in 0..spec.outcomes {
            let truth = spec.cell(i, j);
            let sd = spec.sigma_eps[j] / tau[i].sqrt();
            for &d in &spec.design.doses {
                for &t in &spec.design.times {
                    let m = truth.value(d, t, dom);
                    for k in 0..spec.design.replicates {
                        let eps = if sd > 0.0 { variates::normal(&mut rng, 0.0, sd) } else { 0.0 };
                        records.push(Record {
                            particle: i,
                            outcome: j,
                            replicate: k,
                            dose: d,
                            time: t,
                            y: m + eps,
                        });
                    }
                }
            }
        }
    }
    let data = Dataset::new(records, spec.dims(), dom)?;
    Ok((data, Truth { spec: spec.clone(), tau }))
}

/// `n` errors from the scale mixture with a fresh `tau` per error; marginally
/// `sigma` times a Student-t with `nu` degrees of freedom.
pub fn simulate_mixture_errors(seed: u64, sigma: f64, nu: f64, n: usize) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let tau = variates::gamma(&mut rng, 0.5 * nu, 0.5 * nu)?;
            Ok(variates::normal(&mut rng, 0.0, sigma / tau.sqrt()))
        })
        .collect()
}

/// Posterior recovery of one scalar with a known true value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecovery {
    pub particle: usize,
    pub outcome: usize,
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
    pub abs_error: f64,
    pub covered: bool,
    /// Draws the summary is based on; interaction parameters only count
    /// draws that include the interaction.
    pub n_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecovery {
    pub particle: usize,
    pub outcome: usize,
    pub truth_included: bool,
    pub p_hat: f64,
    /// Median-model rule: included iff `p_hat > 0.5`.
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub params: Vec<ParamRecovery>,
    pub selection: Vec<SelectionRecovery>,
}

impl RecoveryReport {
    pub fn param(&self, i: usize, j: usize, name: &str) -> Option<&ParamRecovery> {
        self.params
            .iter()
            .find(|p| p.particle == i && p.outcome == j && p.name == name)
    }
}

/// Coverage over a set of recoveries: `(rate, binomial standard error, n)`.
pub fn coverage<'a>(rows: impl IntoIterator<Item = &'a ParamRecovery>) -> (f64, f64, usize) {
    let (mut hit, mut n) = (0usize, 0usize);
    for r in rows {
        n += 1;
        hit += r.covered as usize;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let p = hit as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt(), n)
}

fn recover(i: usize, j: usize, name: &str, truth: f64, xs: &[f64]) -> Option<ParamRecovery> {
    if xs.is_empty() {
        return None;
    }
    let s = sorted(xs);
    let m = mean(xs);
    let (q025, q975) = (quantile_sorted(&s, 0.025), quantile_sorted(&s, 0.975));
    Some(ParamRecovery {
        particle: i,
        outcome: j,
        name: name.to_string(),
        truth,
        mean: m,
        q025,
        q975,
        abs_error: (m - truth).abs(),
        covered: q025 <= truth && truth <= q975,
        n_draws: xs.len(),
    })
}

/// Scores a posterior sample against the truth it was simulated from.
/// Only piecewise-linear truth components have parameters to recover.
pub fn score_recovery(truth: &Truth, draws: &[HierarchyParams]) -> Result<RecoveryReport> {
    if draws.is_empty() {
        return Err(Error::Data("cannot score recovery on an empty chain".into()));
    }
    let spec = &truth.spec;
    let mut report = RecoveryReport::default();
    for i in 0..spec.particles {
        for j in 0..spec.outcomes {
            let t = spec.cell(i, j);
            let cells: Vec<_> = draws.iter().map(|d| d.cell(i, j)).collect();
            let mut push = |name: &str, truth: f64, xs: Vec<f64>| {
                if let Some(r) = recover(i, j, name, truth, &xs) {
                    report.params.push(r);
                }
            };
            push("alpha", t.alpha, cells.iter().map(|c| c.alpha).collect());
            if let TruthFn::PiecewiseLinear { knots, coef } = t.dose {
                push("phi1", knots[0], cells.iter().map(|c| c.dose.knots[0]).collect());
                push("phi2", knots[1], cells.iter().map(|c| c.dose.knots[1]).collect());
                push("beta3", coef[2], cells.iter().map(|c| c.dose.coef[2]).collect());
                push("beta4", coef[3], cells.iter().map(|c| c.dose.coef[3]).collect());
            }
            if let TruthFn::PiecewiseLinear { knots, coef } = t.time {
                push("psi1", knots[0], cells.iter().map(|c| c.time.knots[0]).collect());
                push("psi2", knots[1], cells.iter().map(|c| c.time.knots[1]).collect());
                push("gamma3", coef[2], cells.iter().map(|c| c.time.coef[2]).collect());
                push("gamma4", coef[3], cells.iter().map(|c| c.time.coef[3]).collect());
            }
            let included: Vec<&SplineComponent> = cells.iter().filter_map(|c| c.interaction.as_ref()).collect();
            if let TruthFn::PiecewiseLinear { knots, coef } = t.interaction {
                push("chi1", knots[0], included.iter().map(|h| h.knots[0]).collect());
                push("chi2", knots[1], included.iter().map(|h| h.knots[1]).collect());
                push("delta3", coef[2], included.iter().map(|h| h.coef[2]).collect());
                push("delta4", coef[3], included.iter().map(|h| h.coef[3]).collect());
            }
            let p_hat = included.len() as f64 / draws.len() as f64;
            let truth_included = !t.interaction.is_flat();
            report.selection.push(SelectionRecovery {
                particle: i,
                outcome: j,
                truth_included,
                p_hat,
                correct: (p_hat > 0.5) == truth_included,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::SurfaceParams;
    use crate::model::{sample_prior, PriorConfig};

    fn noiseless() -> TruthSpec {
        TruthSpec {
            sigma_eps: vec![0.0, 0.0],
            ..Default::default()
        }
    }

    #[test]
    fn zero_noise_lies_on_truth() {
        let spec = noiseless();
        let (data, _) = simulate_dataset(&spec, 4).unwrap();
        assert_eq!(data.len(), 4 * 10 * 7 * 3);
        for r in data.records() {
            let m = spec.cell(r.particle, r.outcome).value(r.dose, r.time, spec.design.domain);
            assert_eq!(r.y, m);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = TruthSpec::default();
        let (a, ta) = simulate_dataset(&spec, 9).unwrap();
        let (b, tb) = simulate_dataset(&spec, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = simulate_dataset(&spec, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn log_logistic_vanishes_at_origin() {
        let f = TruthFn::LogLogistic { b: -2.0, c: 0.5, d: 3.0, h: 40.0 };
        assert_eq!(f.eval(0.0, 100.0), 0.0);
        // half-way between the asymptotes at the inflection point
        assert!((f.eval(40.0, 100.0) - 1.25).abs() < 1e-12);
        assert!(f.eval(100.0, 100.0) > f.eval(50.0, 100.0));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = TruthSpec::default();
        spec.sigma_eps.pop();
        assert!(simulate_dataset(&spec, 0).is_err());
        let mut spec = TruthSpec::default();
        spec.cells[0].dose = TruthFn::PiecewiseLinear { knots: [80.0, 20.0], coef: [0.0; 4] };
        assert!(simulate_dataset(&spec, 0).is_err());
    }

    /// A state whose components equal the piecewise-linear truth.
    fn state_at_truth(truth: &Truth) -> HierarchyParams {
        let spec = &truth.spec;
        let dom = spec.design.domain;
        let mut s = sample_prior(&PriorConfig::default(), spec.dims(), dom, 0).unwrap();
        for (k, c) in spec.cells.iter().enumerate() {
            let comp = |f: &TruthFn, m: f64| match *f {
                TruthFn::PiecewiseLinear { knots, coef } => Some(SplineComponent::new(knots, coef, m).unwrap()),
                _ => None,
            };
            s.cells[k] = SurfaceParams {
                alpha: c.alpha,
                dose: comp(&c.dose, dom.dose_max).unwrap(),
                time: comp(&c.time, dom.time_max).unwrap(),
                interaction: comp(&c.interaction, dom.interaction_max()),
            };
        }
        s
    }

    #[test]
    fn degenerate_chain_at_truth_recovers_exactly() {
        let (_, truth) = simulate_dataset(&TruthSpec::default(), 1).unwrap();
        let draws = vec![state_at_truth(&truth); 5];
        let r = score_recovery(&truth, &draws).unwrap();
        assert!(r.params.iter().all(|p| p.abs_error == 0.0 && p.covered));
        assert!(r.selection.iter().all(|s| s.correct));
        assert_eq!(coverage(&r.params).0, 1.0);
        // interaction parameters only exist for the two interacting cells
        assert!(r.param(0, 0, "chi1").is_some());
        assert!(r.param(0, 1, "chi1").is_none());
    }

    #[test]
    fn shifted_chain_errors_equal_the_shift() {
        let (_, truth) = simulate_dataset(&TruthSpec::default(), 1).unwrap();
        let mut s = state_at_truth(&truth);
        for c in &mut s.cells {
            c.alpha += 0.25;
            c.dose.knots[0] += 5.0;
        }
        let r = score_recovery(&truth, &[s]).unwrap();
        for (i, j) in [(0, 0), (1, 1)] {
            assert!((r.param(i, j, "alpha").unwrap().abs_error - 0.25).abs() < 1e-12);
            assert!((r.param(i, j, "phi1").unwrap().abs_error - 5.0).abs() < 1e-12);
            assert!(!r.param(i, j, "phi1").unwrap().covered);
        }
    }

    #[test]
    fn mixture_errors_have_t_kurtosis() {
        // excess kurtosis of t(nu) is 6 / (nu - 4); nu = 10 keeps the fourth
        // moment's sampling error manageable
        let xs = simulate_mixture_errors(3, 1.0, 10.0, 400_000).unwrap();
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        let m4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / xs.len() as f64;
        assert!((m2 - 1.25).abs() < 0.02, "{m2}");
        let excess = m4 / (m2 * m2) - 3.0;
        assert!((excess - 1.0).abs() < 0.25, "{excess}");
    }
}
