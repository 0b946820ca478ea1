//! CSV outputs of `summarize` and `diagnose`. Every file starts with a
//! `# manifest=<hash>` comment; particle and outcome labels are 1-based.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use toxsurf::inference::{Band, CellSurface, ExposureMap, ParamDiagnostic, PitReport, PredictiveReport};
use toxsurf::stats::Summary;
use toxsurf::{EvalGrid, RiskSummary};

use crate::error::{CliError, Result};

const BINS: usize = toxsurf::inference::PIT_BINS;

type Sheet = csv::Writer<BufWriter<File>>;

fn write_table(path: &Path, manifest: &str, header: &[&str], body: impl FnOnce(&mut Sheet) -> Result<()>) -> Result<()> {
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# manifest={manifest}").map_err(CliError::io(path))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    body(&mut w)?;
    w.flush().map_err(CliError::io(path))
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

fn labels(i: usize, j: usize) -> [String; 2] {
    [(i + 1).to_string(), (j + 1).to_string()]
}

fn summary_fields(s: &Summary) -> [String; 4] {
    [num(s.mean), num(s.median), num(s.q025), num(s.q975)]
}

const BAND_COLUMNS: [&str; 9] = [
    "mean",
    "median",
    "q025",
    "q975",
    "sd",
    "pointwise_lower",
    "pointwise_upper",
    "simultaneous_lower",
    "simultaneous_upper",
];

fn band_fields(b: &Band, p: usize) -> [String; 9] {
    [
        num(b.mean[p]),
        num(b.median[p]),
        num(b.q025[p]),
        num(b.q975[p]),
        num(b.sd[p]),
        num(b.pointwise_lower[p]),
        num(b.pointwise_upper[p]),
        num(b.simultaneous_lower[p]),
        num(b.simultaneous_upper[p]),
    ]
}

fn with_prefix<'a>(prefix: &[&'a str], rest: &[&'a str]) -> Vec<&'a str> {
    prefix.iter().chain(rest).copied().collect()
}

pub fn write_risk(dir: &Path, manifest: &str, risk: &RiskSummary) -> Result<()> {
    write_table(
        &dir.join("risk_summary.csv"),
        manifest,
        &["particle", "outcome", "parameter", "mean", "median", "q025", "q975"],
        |w| {
            for c in &risk.cells {
                for (name, s) in [
                    ("maximal_safe_dose", &c.maximal_safe_dose),
                    ("maximal_safe_time", &c.maximal_safe_time),
                    ("overall_dose_slope", &c.overall_dose_slope),
                    ("overall_time_slope", &c.overall_time_slope),
                    ("maximal_response", &c.maximal_response),
                ] {
                    let [i, j] = labels(c.particle, c.outcome);
                    let [m, md, lo, hi] = summary_fields(s);
                    w.write_record([i, j, name.to_string(), m, md, lo, hi])?;
                }
            }
            Ok(())
        },
    )?;
    write_table(
        &dir.join("inclusion.csv"),
        manifest,
        &["particle", "outcome", "inclusion_probability"],
        |w| {
            for c in &risk.cells {
                let [i, j] = labels(c.particle, c.outcome);
                w.write_record([i, j, num(c.inclusion_probability)])?;
            }
            Ok(())
        },
    )?;
    write_table(
        &dir.join("conditional_safe_dose.csv"),
        manifest,
        &["particle", "outcome", "time", "mean", "median", "q025", "q975"],
        |w| {
            for c in &risk.cells {
                for (t, s) in &c.conditional_safe_dose {
                    let [i, j] = labels(c.particle, c.outcome);
                    let [m, md, lo, hi] = summary_fields(s);
                    w.write_record([i, j, num(*t), m, md, lo, hi])?;
                }
            }
            Ok(())
        },
    )
}

pub fn write_surfaces(dir: &Path, manifest: &str, grid: &EvalGrid, surfaces: &[CellSurface]) -> Result<()> {
    let nt = grid.times.len();
    write_table(
        &dir.join("surface.csv"),
        manifest,
        &with_prefix(&["particle", "outcome", "dose", "time"], &BAND_COLUMNS),
        |w| {
            for c in surfaces {
                for (p, _) in c.surface.mean.iter().enumerate() {
                    let [i, j] = labels(c.particle, c.outcome);
                    let head = [i, j, num(grid.doses[p / nt]), num(grid.times[p % nt])];
                    w.write_record(head.into_iter().chain(band_fields(&c.surface, p)))?;
                }
            }
            Ok(())
        },
    )?;
    write_table(
        &dir.join("components.csv"),
        manifest,
        &with_prefix(&["particle", "outcome", "component", "x"], &BAND_COLUMNS),
        |w| {
            for c in surfaces {
                for (name, xs, band) in [
                    ("dose", &grid.doses, &c.dose_curve),
                    ("time", &grid.times, &c.time_curve),
                    ("interaction", &c.interaction_points, &c.interaction_curve),
                ] {
                    for (p, &x) in xs.iter().enumerate() {
                        let [i, j] = labels(c.particle, c.outcome);
                        let head = [i, j, name.to_string(), num(x)];
                        w.write_record(head.into_iter().chain(band_fields(band, p)))?;
                    }
                }
            }
            Ok(())
        },
    )
}

pub fn write_exposure(dir: &Path, manifest: &str, grid: &EvalGrid, maps: &[ExposureMap]) -> Result<()> {
    let nt = grid.times.len();
    write_table(
        &dir.join("exposure_map.csv"),
        manifest,
        &["particle", "outcome", "dose", "time", "median_relative"],
        |w| {
            for m in maps {
                for (p, &v) in m.median_relative.iter().enumerate() {
                    let [i, j] = labels(m.particle, m.outcome);
                    w.write_record([i, j, num(grid.doses[p / nt]), num(grid.times[p % nt]), num(v)])?;
                }
            }
            Ok(())
        },
    )
}

pub fn write_pit(dir: &Path, manifest: &str, pit: &PitReport) -> Result<()> {
    let total: u64 = pit.counts.iter().sum();
    write_table(
        &dir.join("pit.csv"),
        manifest,
        &["bin_lower", "bin_upper", "count", "expected", "chi_square", "p_value"],
        |w| {
            for (b, &c) in pit.counts.iter().enumerate() {
                w.write_record([
                    num(b as f64 / BINS as f64),
                    num((b + 1) as f64 / BINS as f64),
                    c.to_string(),
                    num(total as f64 / BINS as f64),
                    num(pit.chi_square),
                    num(pit.p_value),
                ])?;
            }
            Ok(())
        },
    )
}

pub fn write_predictive(dir: &Path, manifest: &str, report: &PredictiveReport) -> Result<()> {
    write_table(
        &dir.join("predictive.csv"),
        manifest,
        &[
            "particle",
            "outcome",
            "dose",
            "time",
            "replicates",
            "empirical_mean",
            "predictive_mean",
            "lower",
            "upper",
            "inside",
        ],
        |w| {
            for c in &report.cells {
                let [i, j] = labels(c.particle, c.outcome);
                w.write_record([
                    i,
                    j,
                    num(c.dose),
                    num(c.time),
                    c.replicates.to_string(),
                    num(c.empirical_mean),
                    num(c.predictive_mean),
                    num(c.lower),
                    num(c.upper),
                    c.inside.to_string(),
                ])?;
            }
            Ok(())
        },
    )
}

pub fn write_convergence(dir: &Path, manifest: &str, diags: &[ParamDiagnostic]) -> Result<()> {
    write_table(
        &dir.join("convergence.csv"),
        manifest,
        &["parameter", "rhat", "ess", "draws", "conditioning_fraction"],
        |w| {
            for d in diags {
                w.write_record([
                    d.name.clone(),
                    opt(d.rhat),
                    opt(d.ess),
                    d.draws.to_string(),
                    num(d.conditioning_fraction),
                ])?;
            }
            Ok(())
        },
    )
}
