use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use toxsurf::basis::{SplineComponent, SurfaceParams};
use toxsurf::inference::*;
use toxsurf::model::{sample_prior, Dataset, Dims, Domain, HierarchyParams, PriorConfig, Record};
use toxsurf::stats::mean;

const DOM: Domain = Domain {
    dose_max: 10.0,
    time_max: 4.0,
};
const DIMS: Dims = Dims {
    particles: 1,
    outcomes: 1,
    replicates: 1,
};

/// A 1x1 state with the given cell surface.
fn state(alpha: f64, phi: [f64; 2], beta: [f64; 4], chi: Option<[f64; 2]>) -> HierarchyParams {
    let mut s = sample_prior(&PriorConfig::default(), DIMS, DOM, 1).unwrap();
    s.cells[0] = SurfaceParams {
        alpha,
        dose: SplineComponent::new(phi, beta, DOM.dose_max).unwrap(),
        time: SplineComponent::new([1.0, 3.0], [0.0, 0.0, 1.0, 2.0], DOM.time_max).unwrap(),
        interaction: chi.map(|k| SplineComponent::new(k, [0.0, 0.0, 0.5, 1.0], DOM.interaction_max()).unwrap()),
    };
    s.sigma2_eps = vec![0.25];
    s.particles[0].tau = 1.0;
    s
}

fn grid() -> EvalGrid {
    EvalGrid::uniform(DOM, 11).unwrap()
}

#[test]
fn identical_draws_collapse_summaries() {
    let s = state(-1.3, [2.0, 7.0], [0.0, 0.0, 1.1, 2.3], Some([8.0, 30.0]));
    let r = risk_parameters(&vec![s; 7], &grid()).unwrap();
    let c = r.cell(0, 0).unwrap();
    for sm in [c.maximal_safe_dose, c.overall_dose_slope, c.maximal_response] {
        assert_eq!(sm.mean, sm.median);
        assert_eq!(sm.q025, sm.median);
        assert_eq!(sm.q975, sm.median);
    }
    assert_eq!(c.inclusion_probability, 1.0);
}

#[test]
fn no_interaction_safe_dose_is_constant_in_time() {
    let draws = vec![
        state(0.0, [2.0, 7.0], [0.0, 0.0, 1.0, 2.0], None),
        state(0.0, [3.0, 8.0], [0.0, 0.0, 1.0, 2.0], None),
    ];
    let r = risk_parameters(&draws, &grid()).unwrap();
    let c = r.cell(0, 0).unwrap();
    let first = c.conditional_safe_dose[0].1;
    assert!(c.conditional_safe_dose.iter().all(|(_, s)| *s == first));
}

#[test]
fn three_draw_hand_computation() {
    let draws = vec![
        state(0.0, [2.0, 6.0], [0.0, 0.0, 2.0, 3.0], None),
        state(0.0, [4.0, 6.0], [0.0, 0.0, 1.0, 3.0], Some([6.0, 20.0])),
        state(0.0, [3.0, 8.0], [0.0, 0.0, 4.0, 5.0], None),
    ];
    let r = risk_parameters(&draws, &grid()).unwrap();
    let c = r.cell(0, 0).unwrap();
    // first knots 2, 4, 3
    assert_eq!(c.maximal_safe_dose.mean, 3.0);
    assert_eq!(c.maximal_safe_dose.median, 3.0);
    assert!((c.maximal_safe_dose.q025 - 2.05).abs() < 1e-12);
    assert!((c.maximal_safe_dose.q975 - 3.95).abs() < 1e-12);
    // slopes 2/4, 1/2, 4/5
    assert!((c.overall_dose_slope.mean - 0.6).abs() < 1e-12);
    assert_eq!(c.overall_dose_slope.median, 0.5);
    assert!((c.inclusion_probability - 1.0 / 3.0).abs() < 1e-15);
    // at t = 4 the second draw's safe dose is min(4, 6 / 4) = 1.5
    let (t, s) = c.conditional_safe_dose.last().unwrap();
    assert_eq!(*t, 4.0);
    assert_eq!(s.median, 2.0);
    assert!((s.mean - 6.5 / 3.0).abs() < 1e-12);
    // maximum response: dose max + time max 2, plus h(40) = 1 for draw 2,
    // giving 5, 6 and 7
    assert_eq!(c.maximal_response.median, 6.0);
    assert_eq!(c.maximal_response.mean, 6.0);
}

#[test]
fn conditional_safe_dose_non_increasing_for_interacting_draws() {
    let cfg = PriorConfig::default();
    for seed in 0..50 {
        let s = sample_prior(&cfg, DIMS, DOM, seed).unwrap();
        if !s.cells[0].rho() {
            continue;
        }
        let r = risk_parameters(std::slice::from_ref(&s), &grid()).unwrap();
        let v: Vec<f64> = r.cells[0].conditional_safe_dose.iter().map(|(_, s)| s.mean).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0]), "{v:?}");
    }
}

#[test]
fn inclusion_probability_is_mean_of_indicators() {
    let cfg = PriorConfig::default();
    let draws: Vec<_> = (0..37).map(|k| sample_prior(&cfg, DIMS, DOM, 100 + k).unwrap()).collect();
    let p = risk_parameters(&draws, &grid()).unwrap().cells[0].inclusion_probability;
    let rho: Vec<f64> = draws.iter().map(|d| d.cells[0].rho() as u8 as f64).collect();
    assert_eq!(p, rho.iter().sum::<f64>() / 37.0);
}

#[test]
fn empty_chain_is_an_error() {
    assert!(risk_parameters(&[], &grid()).is_err());
    assert!(surface_summary(&[], &grid()).is_err());
}

#[test]
fn grid_outside_domain_is_rejected() {
    let s = state(0.0, [2.0, 7.0], [0.0, 0.0, 1.0, 2.0], None);
    let bad = EvalGrid {
        doses: vec![0.0, 11.0],
        times: vec![0.0],
    };
    assert!(surface_summary(&[s.clone()], &bad).is_err());
    assert!(safe_exposure_map(&[s], &bad).is_err());
}

#[test]
fn one_draw_surface_is_the_draw() {
    let s = state(0.7, [2.0, 7.0], [0.0, 0.0, 1.0, 2.0], Some([5.0, 25.0]));
    let g = grid();
    let out = surface_summary(std::slice::from_ref(&s), &g).unwrap();
    let nt = g.times.len();
    for (di, &d) in g.doses.iter().enumerate() {
        for (ti, &t) in g.times.iter().enumerate() {
            assert_eq!(out[0].surface.mean[di * nt + ti], s.cells[0].eval(d, t).unwrap());
        }
    }
}

#[test]
fn bands_nest_and_anchor_at_alpha() {
    let cfg = PriorConfig::default();
    let draws: Vec<_> = (0..200).map(|k| sample_prior(&cfg, DIMS, DOM, k).unwrap()).collect();
    let out = surface_summary(&draws, &grid()).unwrap();
    for b in [&out[0].surface, &out[0].dose_curve, &out[0].time_curve, &out[0].interaction_curve] {
        for p in 0..b.mean.len() {
            assert!(b.simultaneous_lower[p] <= b.pointwise_lower[p]);
            assert!(b.simultaneous_upper[p] >= b.pointwise_upper[p]);
            assert!(b.q025[p] <= b.median[p] && b.median[p] <= b.q975[p]);
        }
    }
    let alphas: Vec<f64> = draws.iter().map(|d| d.cells[0].alpha).collect();
    assert_eq!(out[0].surface.mean[0], mean(&alphas));
}

#[test]
fn exposure_map_zero_at_origin_and_in_flat_region() {
    let draws = vec![
        state(-1.0, [4.0, 7.0], [0.0, 0.0, 1.0, 2.0], None),
        state(2.0, [5.0, 8.0], [0.0, 0.0, 3.0, 2.0], None),
    ];
    let g = grid();
    let maps = safe_exposure_map(&draws, &g).unwrap();
    let nt = g.times.len();
    assert_eq!(maps[0].median_relative[0], 0.0);
    // every draw has phi1 >= 4 and psi1 = 1
    for (di, &d) in g.doses.iter().enumerate() {
        for (ti, &t) in g.times.iter().enumerate() {
            if d < 4.0 && t < 1.0 {
                assert_eq!(maps[0].median_relative[di * nt + ti], 0.0);
            }
        }
    }
}

#[test]
fn exposure_map_matches_oracle_median() {
    let cfg = PriorConfig::default();
    let draws: Vec<_> = (0..21).map(|k| sample_prior(&cfg, DIMS, DOM, 40 + k).unwrap()).collect();
    let g = grid();
    let maps = safe_exposure_map(&draws, &g).unwrap();
    let nt = g.times.len();
    for (di, &d) in g.doses.iter().enumerate() {
        for (ti, &t) in g.times.iter().enumerate() {
            let mut v: Vec<f64> = draws
                .iter()
                .map(|s| {
                    let c = &s.cells[0];
                    let h = c.interaction.map_or(0.0, |h| h.eval(d * t).unwrap());
                    c.dose.eval(d).unwrap() + c.time.eval(t).unwrap() + h
                })
                .collect();
            v.sort_by(f64::total_cmp);
            assert!((maps[0].median_relative[di * nt + ti] - v[10]).abs() < 1e-12);
        }
    }
}

fn one_record(y: f64) -> Dataset {
    let r = |d: f64, t: f64, y: f64| Record {
        particle: 0,
        outcome: 0,
        replicate: 0,
        dose: d,
        time: t,
        y,
    };
    // the dataset needs two distinct doses and times per cell
    Dataset::new(vec![r(5.0, 2.0, y), r(0.0, 0.0, -1.0)], DIMS, DOM).unwrap()
}

#[test]
fn pit_at_predictive_median_is_one_half() {
    let s = state(-1.0, [2.0, 7.0], [0.0, 0.0, 1.0, 2.0], None);
    let m = s.cells[0].eval(5.0, 2.0).unwrap();
    let pit = pit_diagnostic(&[s], &one_record(m)).unwrap();
    assert_eq!(pit.values[0], 0.5);
}

#[test]
fn shifted_data_piles_pit_at_one() {
    let s = state(-1.0, [2.0, 7.0], [0.0, 0.0, 1.0, 2.0], None);
    let m = s.cells[0].eval(5.0, 2.0).unwrap();
    let pit = pit_diagnostic(&[s], &one_record(m + 5.0)).unwrap();
    assert!(pit.values[0] > 0.999);
    assert_eq!(pit.counts[9], 1);
}

#[test]
fn predictive_interval_collapses_without_noise() {
    let mut s = state(-1.0, [2.0, 7.0], [0.0, 0.0, 1.0, 2.0], None);
    s.sigma2_eps = vec![1e-300];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rep = posterior_predictive_mean_check(&vec![s.clone(); 10], &one_record(0.0), &mut rng).unwrap();
    let c = &rep.cells[0];
    let m = s.cells[0].eval(5.0, 2.0).unwrap();
    assert!((c.lower - m).abs() < 1e-12 && (c.upper - m).abs() < 1e-12);
}

#[test]
fn two_draw_predictive_interval_spans_both_means() {
    let mut a = state(-1.0, [2.0, 7.0], [0.0, 0.0, 1.0, 2.0], None);
    let mut b = state(3.0, [2.0, 7.0], [0.0, 0.0, 1.0, 2.0], None);
    a.sigma2_eps = vec![1e-8];
    b.sigma2_eps = vec![1e-8];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rep = posterior_predictive_mean_check(&[a.clone(), b.clone()], &one_record(0.0), &mut rng).unwrap();
    let c = &rep.cells[0];
    let (ma, mb) = (a.cells[0].eval(5.0, 2.0).unwrap(), b.cells[0].eval(5.0, 2.0).unwrap());
    // with two draws the 2.5% / 97.5% quantiles sit 2.5% inside the endpoints
    assert!((c.lower - (ma + 0.025 * (mb - ma))).abs() < 1e-3);
    assert!((c.upper - (ma + 0.975 * (mb - ma))).abs() < 1e-3);
}

fn white_noise(seed: u64, n: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn identical_chains_have_rhat_near_one() {
    let c = white_noise(1, 4000);
    let r = split_rhat(&[c.clone(), c]).unwrap();
    assert!((r - 1.0).abs() < 2e-3, "{r}");
}

#[test]
fn white_noise_ess_is_close_to_n() {
    let chains = vec![white_noise(2, 5000), white_noise(3, 5000)];
    let ess = effective_sample_size(&chains).unwrap();
    assert!((ess / 10_000.0 - 1.0).abs() < 0.2, "{ess}");
}

#[test]
fn disjoint_chains_have_large_rhat() {
    let r = split_rhat(&[vec![0.0; 100], vec![1.0; 100]]).unwrap();
    assert!(r > 2.0);
    let a: Vec<f64> = white_noise(4, 500);
    let b: Vec<f64> = white_noise(5, 500).iter().map(|x| x + 10.0).collect();
    assert!(split_rhat(&[a, b]).unwrap() > 2.0);
}

#[test]
fn ar1_ess_matches_theory() {
    // AR(1) with coefficient r has integrated autocorrelation (1 + r) / (1 - r)
    let r = 0.8;
    let e = white_noise(6, 200_000);
    let mut x = vec![0.0; e.len()];
    for k in 1..e.len() {
        x[k] = r * x[k - 1] + e[k];
    }
    let ess = effective_sample_size(&[x]).unwrap();
    let expect = 200_000.0 * (1.0 - r) / (1.0 + r);
    assert!((ess / expect - 1.0).abs() < 0.1, "{ess} vs {expect}");
}

#[test]
fn convergence_reports_conditioning_and_unavailability() {
    let cfg = PriorConfig::default();
    let draws: Vec<_> = (0..40).map(|k| sample_prior(&cfg, DIMS, DOM, k).unwrap()).collect();
    let stats = convergence_stats(&[&draws[..20], &draws[20..]]).unwrap();
    let chi = stats.iter().find(|p| p.name == "chi1[1,1]").unwrap();
    let rho = draws.iter().filter(|d| d.cells[0].rho()).count();
    assert_eq!(chi.draws, rho);
    assert_eq!(chi.conditioning_fraction, rho as f64 / 40.0);
    // pinned coefficients never move
    let b2 = stats.iter().find(|p| p.name == "beta2[1,1]").unwrap();
    assert!(b2.rhat.is_none());
    assert!(convergence_stats(&[&draws[..3]]).is_err());
    assert!(convergence_stats(&[]).is_err());
}
