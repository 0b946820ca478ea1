use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use toxsurf::model::log_likelihood;
use toxsurf::sampler::{gibbs_update_linear_block, gibbs_update_scales, mh_update_knots, BlockCounters, StepWidths};
use toxsurf::{eval_component, run_chain, simulate_dataset, PriorConfig, SamplerConfig, SplineComponent, TruthSpec};

fn basis(c: &mut Criterion) {
    let comp = SplineComponent::new([30.0, 70.0], [0.0, 0.0, 2.0, 2.5], 100.0).unwrap();
    let xs: Vec<f64> = (0..1000).map(|k| k as f64 * 0.1).collect();
    c.bench_function("eval_component x1000", |b| {
        b.iter(|| xs.iter().map(|&x| eval_component(black_box(x), &comp).unwrap()).sum::<f64>())
    });
}

fn sweeps(c: &mut Criterion) {
    let prior = PriorConfig::default();
    let (data, _) = simulate_dataset(&TruthSpec::default(), 1).unwrap();
    let cfg = SamplerConfig {
        n_burnin: 200,
        n_samples: 0,
        ..Default::default()
    };
    let state = run_chain(&data, &prior, &cfg).unwrap().final_state.unwrap();
    let cells = state.cells.len();

    c.bench_function("log_likelihood 840 records", |b| b.iter(|| log_likelihood(black_box(&state), &data).unwrap()));

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    c.bench_function("linear block sweep", |b| {
        b.iter_batched_ref(
            || state.clone(),
            |s| gibbs_update_linear_block(s, &data, &prior, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("scale sweep", |b| {
        b.iter_batched_ref(
            || state.clone(),
            |s| gibbs_update_scales(s, &data, &prior, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
    let widths = StepWidths::new(cells, state.domain, cfg.initial_step_widths);
    c.bench_function("knot sweep", |b| {
        b.iter_batched_ref(
            || (state.clone(), BlockCounters::new(cells)),
            |(s, counters)| mh_update_knots(s, &data, &prior, &mut rng, &widths, counters).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn chain(c: &mut Criterion) {
    let prior = PriorConfig::default();
    let (data, _) = simulate_dataset(&TruthSpec::default(), 1).unwrap();
    let cfg = SamplerConfig {
        n_burnin: 100,
        n_samples: 100,
        ..Default::default()
    };
    let mut g = c.benchmark_group("chain");
    g.sample_size(10);
    g.bench_function("200 iterations", |b| b.iter(|| run_chain(&data, &prior, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, basis, sweeps, chain);
criterion_main!(benches);
