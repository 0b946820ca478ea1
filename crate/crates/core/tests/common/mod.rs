#![allow(dead_code)]

use toxsurf::model::{Dataset, Domain, HierarchyParams, PriorConfig};
use toxsurf::sampler::{run_chain_with, SamplerConfig};
use toxsurf::synth::{Design, TruthSpec};
use toxsurf::simulate_dataset;

/// Hat-function weights on `{0, k1, k2, m}` written out segment by segment.
pub fn hat(x: f64, k1: f64, k2: f64, m: f64) -> [f64; 4] {
    if x <= k1 {
        [1.0 - x / k1, x / k1, 0.0, 0.0]
    } else if x <= k2 {
        let w = (x - k1) / (k2 - k1);
        [0.0, 1.0 - w, w, 0.0]
    } else {
        let w = (x - k2) / (m - k2);
        [0.0, 0.0, 1.0 - w, w]
    }
}

/// Small 2x2 design: five doses by four times, two replicates.
pub fn mini_spec() -> TruthSpec {
    TruthSpec {
        design: Design {
            doses: vec![0.0, 25.0, 50.0, 75.0, 100.0],
            times: vec![0.0, 2.0, 4.0, 6.0],
            replicates: 2,
            domain: Domain {
                dose_max: 100.0,
                time_max: 6.0,
            },
        },
        ..Default::default()
    }
}

pub fn mini_data(seed: u64) -> Dataset {
    simulate_dataset(&mini_spec(), seed).unwrap().0
}

/// A plausible state for `data`: the end of a short chain.
pub fn settled_state(data: &Dataset, seed: u64, iterations: usize) -> HierarchyParams {
    let cfg = SamplerConfig {
        n_burnin: iterations,
        n_samples: 0,
        seed,
        ..Default::default()
    };
    run_chain_with(data, &PriorConfig::default(), &cfg, 0, None, &mut ())
        .unwrap()
        .final_state
        .unwrap()
}
