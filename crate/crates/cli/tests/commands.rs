use std::path::{Path, PathBuf};
use std::process::Command;

use toxsurf::model::{sample_prior, Dims, Domain, PriorConfig};
use toxsurf::{risk_parameters, run_chain_with, EvalGrid, HierarchyParams, SplineComponent};
use toxsurf_cli::chainfile::{read_chain, ChainWriter};
use toxsurf_cli::ingest::{ingest, DomainOverride};
use toxsurf_cli::{cmd_diagnose, cmd_fit, cmd_simulate, cmd_summarize, CliError, Normalization, RunConfig};

fn simulated(dir: &Path, seed: u64) -> RunConfig {
    let mut cfg = RunConfig {
        out: dir.join("sim"),
        ..RunConfig::default()
    };
    cfg.sampler.seed = seed;
    let (data, _) = cmd_simulate(&cfg).unwrap();
    cfg.data = Some(data);
    cfg.out = dir.join("fit");
    cfg.grid = 11;
    cfg.sampler.n_burnin = 100;
    cfg.sampler.n_samples = 50;
    cfg
}

/// Reads a table, skipping the manifest line, as header and rows.
fn table(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    let hash = first.strip_prefix("# manifest=").expect("manifest line").to_string();
    let body = lines.collect::<Vec<_>>().join("\n");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let rows = rdr.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect();
    (hash, rows)
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn smoke_fit_writes_requested_draws() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = simulated(dir.path(), 3);
    cfg.chains = 2;
    let out = cmd_fit(&cfg).unwrap();
    assert_eq!(out.chain_files.len(), 2);
    for (c, p) in out.chain_files.iter().enumerate() {
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().count(), 50);
        let chain = read_chain(p).unwrap();
        assert_eq!(chain.chain, c);
        assert_eq!(chain.manifest.as_deref(), Some(out.hash.as_str()));
        assert!(cfg.out.join(format!("telemetry-{c}.json")).exists());
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(cfg.out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["hash"], out.hash.as_str());
    assert_eq!(manifest["manifest"]["sampler"]["n_samples"], 50);
    assert_eq!(manifest["manifest"]["clamp_eps"], 1e-4);
}

#[test]
fn refit_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulated(dir.path(), 4);
    let a = cmd_fit(&cfg).unwrap();
    let first = std::fs::read(&a.chain_files[0]).unwrap();
    let b = cmd_fit(&cfg).unwrap();
    assert_eq!(a.hash, b.hash);
    assert_eq!(first, std::fs::read(&b.chain_files[0]).unwrap());
}

#[test]
fn stored_summaries_match_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulated(dir.path(), 5);
    let fit = cmd_fit(&cfg).unwrap();
    let data = ingest(cfg.data.as_ref().unwrap(), Normalization::RawPercent, 1e-4, DomainOverride::default()).unwrap();
    let direct = run_chain_with(&data, &cfg.prior, &cfg.sampler, 0, None, &mut ()).unwrap();
    let stored = read_chain(&fit.chain_files[0]).unwrap();
    assert_eq!(stored.draws, direct.draws);

    cmd_summarize(&cfg, &[cfg.out.clone()], false).unwrap();
    let grid = EvalGrid::uniform(data.domain(), cfg.grid).unwrap();
    let risk = risk_parameters(&direct.draws, &grid).unwrap();
    let (hash, rows) = table(&cfg.out.join("risk_summary.csv"));
    assert_eq!(hash, fit.hash);
    for row in rows.iter().filter(|r| r[2] == "maximal_safe_dose") {
        let c = risk.cell(row[0].parse::<usize>().unwrap() - 1, row[1].parse::<usize>().unwrap() - 1).unwrap();
        assert_eq!(f(&row[3]), c.maximal_safe_dose.mean);
        assert_eq!(f(&row[5]), c.maximal_safe_dose.q025);
    }
    let (_, inclusion) = table(&cfg.out.join("inclusion.csv"));
    assert_eq!(inclusion.len(), 4);
    for row in &inclusion {
        assert!((0.0..=1.0).contains(&f(&row[2])));
    }
    for name in ["surface.csv", "components.csv", "exposure_map.csv", "conditional_safe_dose.csv"] {
        let (h, rows) = table(&cfg.out.join(name));
        assert_eq!(h, fit.hash);
        assert!(!rows.is_empty(), "{name}");
    }
}

fn hand_draw(phi1: f64, interaction: bool) -> HierarchyParams {
    let dims = Dims {
        particles: 1,
        outcomes: 1,
        replicates: 1,
    };
    let domain = Domain {
        dose_max: 10.0,
        time_max: 5.0,
    };
    let mut s = sample_prior(&PriorConfig::default(), dims, domain, 1).unwrap();
    let c = &mut s.cells[0];
    c.dose = SplineComponent::new([phi1, 9.0], [0.0, 0.0, 1.0, 1.0], 10.0).unwrap();
    c.interaction = interaction.then(|| SplineComponent::new([10.0, 20.0], [0.0, 0.0, 1.0, 1.0], 50.0).unwrap());
    s
}

#[test]
fn three_draw_chain_hand_checked() {
    let dir = tempfile::tempdir().unwrap();
    let mut w = ChainWriter::create(dir.path(), 0, "hand").unwrap();
    for (k, (phi1, inter)) in [(1.0, true), (2.0, false), (6.0, true)].into_iter().enumerate() {
        w.write(k, &hand_draw(phi1, inter)).unwrap();
    }
    w.finish().unwrap();
    let cfg = RunConfig {
        out: dir.path().join("tables"),
        grid: 3,
        ..RunConfig::default()
    };
    cmd_summarize(&cfg, &[dir.path().to_owned()], false).unwrap();
    let (hash, rows) = table(&cfg.out.join("risk_summary.csv"));
    assert_eq!(hash, "hand");
    let msd = rows.iter().find(|r| r[2] == "maximal_safe_dose").unwrap();
    // mean 3, median 2, q025 = 1 + 0.05 * 1, q975 = 2 + 0.95 * 4
    assert_eq!([f(&msd[3]), f(&msd[4])], [3.0, 2.0]);
    assert!((f(&msd[5]) - 1.05).abs() < 1e-12);
    assert!((f(&msd[6]) - 5.8).abs() < 1e-12);
    let (_, inc) = table(&cfg.out.join("inclusion.csv"));
    assert!((f(&inc[0][2]) - 2.0 / 3.0).abs() < 1e-15);
    // at t = 5 the interaction bound chi1 / t = 2 applies to draws 1 and 3
    let (_, csd) = table(&cfg.out.join("conditional_safe_dose.csv"));
    let at5 = csd.iter().find(|r| f(&r[2]) == 5.0).unwrap();
    assert!((f(&at5[3]) - 5.0 / 3.0).abs() < 1e-12);
}

#[test]
fn mixed_manifests_need_force() {
    let dir = tempfile::tempdir().unwrap();
    for (c, h) in [(0, "a"), (1, "b")] {
        let mut w = ChainWriter::create(dir.path(), c, h).unwrap();
        w.write(0, &hand_draw(2.0, false)).unwrap();
        w.finish().unwrap();
    }
    let cfg = RunConfig {
        out: dir.path().join("tables"),
        grid: 3,
        ..RunConfig::default()
    };
    let chains = [dir.path().to_owned()];
    assert!(matches!(cmd_summarize(&cfg, &chains, false), Err(CliError::MixedManifests(_))));
    cmd_summarize(&cfg, &chains, true).unwrap();
    let (hash, _) = table(&cfg.out.join("inclusion.csv"));
    assert_eq!(hash, "a+b");
}

#[test]
fn schema_mismatch_is_explicit() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("chain-0.jsonl");
    std::fs::write(&p, "{\"schema\":2,\"manifest\":\"x\",\"chain\":0,\"index\":0,\"draw\":{}}\n").unwrap();
    let cfg = RunConfig {
        out: dir.path().join("tables"),
        ..RunConfig::default()
    };
    let err = cmd_summarize(&cfg, &[p], false).unwrap_err();
    assert!(matches!(err, CliError::Schema { found: 2, .. }));
    assert!(err.to_string().contains("schema version 2"));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let read = |sub: &str| {
        let cfg = RunConfig {
            out: dir.path().join(sub),
            ..RunConfig::default()
        };
        let (d, t) = cmd_simulate(&cfg).unwrap();
        (std::fs::read(d).unwrap(), std::fs::read(t).unwrap())
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn simulated_data_ingests_to_the_truth_design() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulated(dir.path(), 6);
    let data = ingest(cfg.data.as_ref().unwrap(), Normalization::RawPercent, 1e-4, DomainOverride::default()).unwrap();
    assert_eq!(data.dims(), cfg.truth.dims());
    assert_eq!(data.len(), 2 * 2 * 3 * 10 * 7);
}

#[test]
fn empty_chain_is_diagnostic_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    let w = ChainWriter::create(dir.path(), 0, "h").unwrap();
    w.finish().unwrap();
    let cfg = RunConfig {
        out: dir.path().join("diag"),
        ..RunConfig::default()
    };
    let err = cmd_diagnose(&cfg, &[dir.path().to_owned()], false).unwrap_err();
    assert!(err.to_string().contains("diagnostic unavailable"), "{err}");
}

#[test]
fn simulate_fit_diagnose_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = simulated(dir.path(), 7);
    cfg.chains = 2;
    cfg.sampler.n_burnin = 1500;
    cfg.sampler.n_samples = 500;
    let fit = cmd_fit(&cfg).unwrap();
    // the data path comes from the fit's manifest
    let diag = RunConfig {
        data: None,
        ..cfg.clone()
    };
    cmd_diagnose(&diag, &[cfg.out.clone()], false).unwrap();
    let (hash, pit) = table(&cfg.out.join("pit.csv"));
    assert_eq!(hash, fit.hash);
    assert_eq!(pit.len(), 10);
    let total: u64 = pit.iter().map(|r| r[2].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 840);
    assert!(f(&pit[0][5]) > 0.01, "PIT p = {}", pit[0][5]);
    let (_, conv) = table(&cfg.out.join("convergence.csv"));
    assert!(conv.iter().any(|r| r[0] == "alpha[1,1]"));
    let (_, pred) = table(&cfg.out.join("predictive.csv"));
    assert_eq!(pred.len(), 2 * 2 * 10 * 7);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_toxsurf"))
}

#[test]
fn binary_reports_input_errors_with_exit_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "particle,outcome,replicate,dose,time,value\n1,1,1,0,0,150\n").unwrap();
    let out = bin()
        .args(["fit", "--n-burnin", "10", "--n-samples", "5", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:2:"), "{err}");
}

#[test]
fn binary_fit_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let sim: PathBuf = dir.path().join("sim");
    let status = bin().args(["simulate", "--seed", "2", "--out"]).arg(&sim).status().unwrap();
    assert!(status.success());
    let out = dir.path().join("run");
    let status = bin()
        .args(["fit", "--n-burnin", "100", "--n-samples", "50", "--grid", "5", "--data"])
        .arg(sim.join("data.csv"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let status = bin().args(["summarize", "--grid", "5", "--out"]).arg(&out).status().unwrap();
    assert!(status.success());
    assert!(out.join("risk_summary.csv").exists());
}
