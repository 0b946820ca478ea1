//! The four subcommands, callable in-process.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use toxsurf::sampler::chain_rng;
use toxsurf::{
    convergence_stats, pit_diagnostic, posterior_predictive_mean_check, risk_parameters, run_chain_with,
    safe_exposure_map, simulate_dataset, surface_summary, Dataset, EvalGrid, HierarchyParams, Telemetry,
};

use crate::chainfile::{list_chains, read_chain, Chain, ChainWriter};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::ingest::{read_dataset, write_dataset, DomainOverride};
use crate::manifest::{sha256_hex, Manifest, CHAIN_SCHEMA};
use crate::tables;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Contents of `manifest.json`. Only `manifest` is hashed; the data path is
/// kept for `diagnose` but does not affect reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub hash: String,
    pub data: Option<PathBuf>,
    pub manifest: Manifest,
}

#[derive(Debug, Serialize)]
struct TelemetryFile<'a> {
    manifest: &'a str,
    chain: usize,
    draws: usize,
    telemetry: &'a Telemetry,
    log_posterior: &'a [f64],
}

#[derive(Debug)]
pub struct FitOutcome {
    pub hash: String,
    pub chain_files: Vec<PathBuf>,
}

fn load_data(cfg: &RunConfig, path: &Path) -> Result<(Dataset, String)> {
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    let over = DomainOverride {
        dose_max: cfg.dose_max,
        time_max: cfg.time_max,
    };
    let data = read_dataset(bytes.as_slice(), path, cfg.normalization, cfg.clamp_eps, over)?;
    Ok((data, sha256_hex(&bytes)))
}

/// A warm start is either a JSON state or a chain file, whose last draw is used.
fn load_warm_start(path: &Path) -> Result<(HierarchyParams, String)> {
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    let state = if path.extension().is_some_and(|e| e == "jsonl") {
        read_chain(path)?.draws.pop().ok_or_else(|| CliError::Input {
            path: path.to_owned(),
            line: 0,
            message: "warm-start chain has no draws".into(),
        })?
    } else {
        serde_json::from_slice(&bytes).map_err(|e| CliError::Input {
            path: path.to_owned(),
            line: e.line(),
            message: e.to_string(),
        })?
    };
    Ok((state, sha256_hex(&bytes)))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(CliError::io(path))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    let data_path = cfg.data.as_deref().ok_or_else(|| CliError::Usage("fit needs --data".into()))?;
    let (data, data_sha256) = load_data(cfg, data_path)?;
    let warm = cfg.warm_start.as_deref().map(load_warm_start).transpose()?;
    if let Some((s, _)) = &warm {
        if s.dims != data.dims() || s.domain != data.domain() {
            return Err(CliError::Usage("warm-start state does not match the data's dimensions or domain".into()));
        }
        s.check_invariants(&cfg.prior)?;
    }
    let manifest = Manifest {
        version: VERSION.into(),
        schema: CHAIN_SCHEMA,
        chains: cfg.chains,
        grid: cfg.grid,
        normalization: cfg.normalization,
        clamp_eps: cfg.clamp_eps,
        dims: data.dims(),
        domain: data.domain(),
        data_sha256,
        warm_start_sha256: warm.as_ref().map(|(_, h)| h.clone()),
        prior: cfg.prior.clone(),
        sampler: cfg.sampler.clone(),
    };
    let hash = manifest.hash()?;
    create_dir(&cfg.out)?;
    write_json(
        &cfg.out.join("manifest.json"),
        &ManifestFile {
            hash: hash.clone(),
            data: Some(data_path.to_owned()),
            manifest,
        },
    )?;

    let init = warm.map(|(s, _)| s);
    let results: Vec<Result<PathBuf>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.chains)
            .map(|c| {
                let (data, init, hash) = (&data, init.clone(), hash.as_str());
                scope.spawn(move || fit_one(cfg, data, c, init, hash))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    });
    let chain_files = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(FitOutcome { hash, chain_files })
}

fn fit_one(cfg: &RunConfig, data: &Dataset, c: usize, init: Option<HierarchyParams>, hash: &str) -> Result<PathBuf> {
    let writer = Mutex::new(Some(ChainWriter::create(&cfg.out, c, hash)?));
    let write_error: Mutex<Option<CliError>> = Mutex::new(None);
    let mut sink = |k: usize, d: &HierarchyParams| -> toxsurf::Result<()> {
        let mut w = writer.lock().unwrap();
        let w = w.as_mut().expect("writer present while sampling");
        w.write(k, d).map_err(|e| {
            let msg = e.to_string();
            *write_error.lock().unwrap() = Some(e);
            toxsurf::Error::Data(format!("could not store draw: {msg}"))
        })
    };
    let run = run_chain_with(data, &cfg.prior, &cfg.sampler, c as u64, init, &mut sink);
    let writer = writer.into_inner().unwrap().expect("writer present after sampling");
    let (output, failure) = match run {
        Ok(o) => (o, None),
        Err(abort) => (abort.partial, Some(abort.error)),
    };
    write_json(
        &cfg.out.join(format!("telemetry-{c}.json")),
        &TelemetryFile {
            manifest: hash,
            chain: c,
            draws: output.draws.len(),
            telemetry: &output.telemetry,
            log_posterior: &output.log_posterior,
        },
    )?;
    match failure {
        None => writer.finish(),
        Some(e) => {
            writer.abandon()?;
            match write_error.into_inner().unwrap() {
                Some(io) => Err(io),
                None => Err(e.into()),
            }
        }
    }
}

/// Chain files named on the command line; directories expand to the
/// completed chains they contain.
pub fn resolve_chains(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            out.extend(list_chains(p)?);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no chain files found".into()));
    }
    Ok(out)
}

/// Reads the chains and checks they come from a single run. Returns the
/// common manifest hash, or a combined label when forced.
pub fn load_chains(paths: &[PathBuf], force: bool) -> Result<(Vec<Chain>, String)> {
    let chains = resolve_chains(paths)?.iter().map(|p| read_chain(p)).collect::<Result<Vec<_>>>()?;
    let mut hashes: Vec<&str> = chains.iter().filter_map(|c| c.manifest.as_deref()).collect();
    hashes.sort_unstable();
    hashes.dedup();
    let label = match hashes.as_slice() {
        [] => "none".to_string(),
        [h] => h.to_string(),
        many if force => many.join("+"),
        many => return Err(CliError::MixedManifests(many.join(", "))),
    };
    Ok((chains, label))
}

fn pooled(chains: &[Chain]) -> Vec<HierarchyParams> {
    chains.iter().flat_map(|c| c.draws.iter().cloned()).collect()
}

fn grid_for(draws: &[HierarchyParams], n: usize) -> Result<EvalGrid> {
    let first = draws
        .first()
        .ok_or_else(|| toxsurf::Error::Unavailable("the chain files hold no draws".into()))?;
    Ok(EvalGrid::uniform(first.domain, n)?)
}

pub fn cmd_summarize(cfg: &RunConfig, chains: &[PathBuf], force: bool) -> Result<()> {
    let (chains, hash) = load_chains(chains, force)?;
    let draws = pooled(&chains);
    let grid = grid_for(&draws, cfg.grid)?;
    create_dir(&cfg.out)?;
    tables::write_risk(&cfg.out, &hash, &risk_parameters(&draws, &grid)?)?;
    tables::write_surfaces(&cfg.out, &hash, &grid, &surface_summary(&draws, &grid)?)?;
    tables::write_exposure(&cfg.out, &hash, &grid, &safe_exposure_map(&draws, &grid)?)?;
    Ok(())
}

/// Writes `data.csv` and `truth.json` into the output directory.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<(PathBuf, PathBuf)> {
    let (data, truth) = simulate_dataset(&cfg.truth, cfg.sampler.seed)?;
    create_dir(&cfg.out)?;
    let tag = sha256_hex(&serde_json::to_vec(&(&cfg.truth, cfg.sampler.seed))?);
    let data_path = cfg.out.join("data.csv");
    let file = std::fs::File::create(&data_path).map_err(CliError::io(&data_path))?;
    write_dataset(std::io::BufWriter::new(file), &data, Some(&tag))?;
    let truth_path = cfg.out.join("truth.json");
    write_json(&truth_path, &truth)?;
    Ok((data_path, truth_path))
}

/// Convergence diagnostics always; PIT and the predictive check when the
/// data can be located (`--data`, or the path recorded by `fit`).
pub fn cmd_diagnose(cfg: &RunConfig, chain_paths: &[PathBuf], force: bool) -> Result<()> {
    let (chains, hash) = load_chains(chain_paths, force)?;
    if let Some(empty) = chains.iter().find(|c| c.draws.is_empty()) {
        return Err(toxsurf::Error::Unavailable(format!("{} holds no draws", empty.path.display())).into());
    }
    create_dir(&cfg.out)?;
    let per_chain: Vec<&[HierarchyParams]> = chains.iter().map(|c| c.draws.as_slice()).collect();
    tables::write_convergence(&cfg.out, &hash, &convergence_stats(&per_chain)?)?;

    let run = find_manifest(chain_paths, &hash);
    let data_path = cfg.data.clone().or_else(|| run.as_ref().and_then(|r| r.data.clone()));
    let Some(data_path) = data_path else {
        return Ok(());
    };
    // ingest the way the fit did, when its manifest is at hand
    let mut ingest_cfg = cfg.clone();
    if let Some(r) = &run {
        ingest_cfg.normalization = r.manifest.normalization;
        ingest_cfg.clamp_eps = r.manifest.clamp_eps;
        ingest_cfg.dose_max = Some(r.manifest.domain.dose_max);
        ingest_cfg.time_max = Some(r.manifest.domain.time_max);
    }
    let (data, _) = load_data(&ingest_cfg, &data_path)?;
    let draws = pooled(&chains);
    tables::write_pit(&cfg.out, &hash, &pit_diagnostic(&draws, &data)?)?;
    let seed = run.as_ref().map_or(cfg.sampler.seed, |r| r.manifest.sampler.seed);
    // a stream no chain uses
    let mut rng = chain_rng(seed, u64::MAX);
    tables::write_predictive(&cfg.out, &hash, &posterior_predictive_mean_check(&draws, &data, &mut rng)?)?;
    Ok(())
}

fn find_manifest(chain_paths: &[PathBuf], hash: &str) -> Option<ManifestFile> {
    chain_paths.iter().find_map(|p| {
        let dir = if p.is_dir() { p.as_path() } else { p.parent()? };
        let text = std::fs::read_to_string(dir.join("manifest.json")).ok()?;
        let m: ManifestFile = serde_json::from_str(&text).ok()?;
        (m.hash == hash).then_some(m)
    })
}
