//! MCMC for the hierarchical surface model.
//!
//! One iteration runs, in order: an interaction birth/death move, a
//! Metropolis sweep over the knots, the conjugate sweep over baselines and
//! coefficients, and the sweep over variances and hyperparameters.

pub mod adapt;
pub mod gibbs;
pub mod knots;
pub mod rjmcmc;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::prior::sample_prior_with;
use crate::model::{log_posterior, Dataset, HierarchyParams, PriorConfig};

pub use adapt::{adapt_step_widths, BlockCounters, KnotBlock, StepWidths};
pub use gibbs::{gibbs_update_linear_block, gibbs_update_scales};
pub use knots::mh_update_knots;
pub use rjmcmc::{rjmcmc_interaction_move, InteractionProposal, RjCounters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_burnin: usize,
    pub n_samples: usize,
    pub thin: usize,
    /// Burn-in iterations between width adaptations.
    pub adapt_interval: usize,
    /// Acceptance band the knot widths are tuned toward.
    pub target_accept: [f64; 2],
    /// Initial knot half-widths as fractions of the dose, time and
    /// dose-time ranges.
    pub initial_step_widths: [f64; 3],
    /// Probability of attempting an interaction move in an iteration.
    pub rj_move_rate: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_burnin: 60_000,
            n_samples: 20_000,
            thin: 1,
            adapt_interval: 200,
            target_accept: [0.30, 0.70],
            initial_step_widths: [0.05; 3],
            rj_move_rate: 1.0,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 || self.adapt_interval == 0 {
            return Err(Error::Config("thin and adapt_interval must be positive".into()));
        }
        let [lo, hi] = self.target_accept;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::Config(format!("target_accept must satisfy 0 < lo < hi < 1, got {:?}", self.target_accept)));
        }
        if !self.initial_step_widths.iter().all(|&w| w > 0.0 && w <= 1.0) {
            return Err(Error::Config("initial_step_widths must lie in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.rj_move_rate) {
            return Err(Error::Config("rj_move_rate must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn total_iterations(&self) -> usize {
        self.n_burnin + self.n_samples * self.thin
    }
}

/// Acceptance bookkeeping for one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub burnin: BlockCounters,
    pub sampling: BlockCounters,
    pub final_widths: StepWidths,
    pub rj: RjCounters,
    pub adaptations: usize,
}

impl Telemetry {
    /// Post-burn-in acceptance rate of each block with at least
    /// `min_attempts` proposals.
    pub fn sampling_rates(&self, min_attempts: u64) -> Vec<(KnotBlock, f64)> {
        self.final_widths
            .blocks()
            .filter(|b| self.sampling.attempts(*b) >= min_attempts)
            .filter_map(|b| self.sampling.rate(b).map(|r| (b, r)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub draws: Vec<HierarchyParams>,
    /// Log-posterior after every iteration, burn-in included.
    pub log_posterior: Vec<f64>,
    pub telemetry: Telemetry,
    pub final_state: Option<HierarchyParams>,
}

/// Receives each retained draw as soon as it is produced.
pub trait DrawSink {
    fn record(&mut self, index: usize, draw: &HierarchyParams) -> Result<()>;
}

impl DrawSink for () {
    fn record(&mut self, _: usize, _: &HierarchyParams) -> Result<()> {
        Ok(())
    }
}

impl<F: FnMut(usize, &HierarchyParams) -> Result<()>> DrawSink for F {
    fn record(&mut self, index: usize, draw: &HierarchyParams) -> Result<()> {
        self(index, draw)
    }
}

/// A chain that stopped early, with everything produced before the failure.
#[derive(Debug)]
pub struct ChainAbort {
    pub error: Error,
    pub partial: ChainOutput,
}

impl fmt::Display for ChainAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chain aborted after {} draws: {}", self.partial.draws.len(), self.error)
    }
}

impl std::error::Error for ChainAbort {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<ChainAbort> for Error {
    fn from(a: ChainAbort) -> Self {
        a.error
    }
}

/// The generator for chain `chain` under `seed`: one ChaCha stream per chain.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// Runs one chain initialised from a prior draw.
pub fn run_chain(data: &Dataset, prior: &PriorConfig, cfg: &SamplerConfig) -> Result<ChainOutput, ChainAbort> {
    run_chain_with(data, prior, cfg, 0, None, &mut ())
}

/// Runs chain number `chain`, optionally from a given state, streaming draws
/// into `sink`.
pub fn run_chain_with(
    data: &Dataset,
    prior: &PriorConfig,
    cfg: &SamplerConfig,
    chain: u64,
    init: Option<HierarchyParams>,
    sink: &mut dyn DrawSink,
) -> Result<ChainOutput, ChainAbort> {
    let cells = data.dims().cells();
    let mut out = ChainOutput {
        draws: Vec::with_capacity(cfg.n_samples),
        log_posterior: Vec::with_capacity(cfg.total_iterations()),
        telemetry: Telemetry {
            burnin: BlockCounters::new(cells),
            sampling: BlockCounters::new(cells),
            final_widths: StepWidths::new(cells, data.domain(), cfg.initial_step_widths),
            rj: RjCounters::default(),
            adaptations: 0,
        },
        final_state: None,
    };
    let abort = |error: Error, partial: ChainOutput| ChainAbort { error, partial };
    if let Err(e) = cfg.validate().and_then(|_| prior.validate()) {
        return Err(abort(e, out));
    }
    let mut rng = chain_rng(cfg.seed, chain);
    let mut state = match init {
        Some(s) => s,
        None => match sample_prior_with(&mut rng, prior, data.dims(), data.domain()) {
            Ok(s) => s,
            Err(e) => return Err(abort(e, out)),
        },
    };
    if let Err(e) = state.check_invariants(prior) {
        return Err(abort(e, out));
    }
    let mut window = BlockCounters::new(cells);
    let total = cfg.total_iterations();
    for it in 1..=total {
        let burnin = it <= cfg.n_burnin;
        let step = (|| -> Result<()> {
            let tag = |block: &'static str| move |e: Error| Error::Sampler { iteration: it, block, source: Box::new(e) };
            rjmcmc_interaction_move(&mut state, data, prior, &mut rng, cfg.rj_move_rate, &mut out.telemetry.rj)
                .map_err(tag("interaction"))?;
            let mut counts = BlockCounters::new(cells);
            mh_update_knots(&mut state, data, prior, &mut rng, &out.telemetry.final_widths, &mut counts)
                .map_err(tag("knots"))?;
            gibbs_update_linear_block(&mut state, data, prior, &mut rng).map_err(tag("linear"))?;
            gibbs_update_scales(&mut state, data, prior, &mut rng).map_err(tag("scales"))?;
            if burnin {
                out.telemetry.burnin.merge(&counts);
                window.merge(&counts);
            } else {
                out.telemetry.sampling.merge(&counts);
            }
            let lp = log_posterior(&state, data, prior).map_err(tag("log_posterior"))?;
            if !lp.is_finite() {
                return Err(Error::Sampler {
                    iteration: it,
                    block: "log_posterior",
                    source: Box::new(Error::Numerical(format!("log posterior is {lp}"))),
                });
            }
            out.log_posterior.push(lp);
            Ok(())
        })();
        if let Err(e) = step {
            out.final_state = Some(state);
            return Err(abort(e, out));
        }
        if burnin && it % cfg.adapt_interval == 0 {
            adapt_step_widths(&mut out.telemetry.final_widths, &window, cfg.target_accept, data.domain());
            window.clear();
            out.telemetry.adaptations += 1;
        }
        if !burnin && (it - cfg.n_burnin) % cfg.thin == 0 {
            let recorded = state
                .check_invariants(prior)
                .and_then(|_| sink.record(out.draws.len(), &state));
            if let Err(e) = recorded {
                out.final_state = Some(state);
                return Err(abort(e, out));
            }
            out.draws.push(state.clone());
        }
    }
    out.final_state = Some(state);
    Ok(out)
}

/// Runs `n_chains` independent chains in parallel, chain `c` on stream `c`.
pub fn run_chains(
    data: &Dataset,
    prior: &PriorConfig,
    cfg: &SamplerConfig,
    n_chains: usize,
) -> Vec<Result<ChainOutput, ChainAbort>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..n_chains)
            .map(|c| s.spawn(move || run_chain_with(data, prior, cfg, c as u64, None, &mut ())))
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    })
}
