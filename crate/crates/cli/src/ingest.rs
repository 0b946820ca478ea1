//! Reading and writing the screening CSV format.
//!
//! Header `particle,outcome,replicate,dose,time,value`; particle, outcome
//! and replicate are 1-based labels. Lines starting with `#` are comments.

use std::io::Write;
use std::path::Path;

use serde::Deserialize;
use toxsurf::model::{Dataset, Dims, Domain, Record};

use crate::config::Normalization;
use crate::error::{CliError, Result};

pub const HEADER: [&str; 6] = ["particle", "outcome", "replicate", "dose", "time", "value"];

#[derive(Debug, Deserialize)]
struct Row {
    particle: usize,
    outcome: usize,
    replicate: usize,
    dose: f64,
    time: f64,
    value: f64,
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn inv_logit(y: f64) -> f64 {
    1.0 / (1.0 + (-y).exp())
}

/// Percent to logit scale with `p = value / 100` clamped to `[eps, 1 - eps]`.
pub fn percent_to_logit(value: f64, eps: f64) -> f64 {
    logit((value / 100.0).clamp(eps, 1.0 - eps))
}

/// Optional domain bounds overriding the observed maxima.
#[derive(Debug, Clone, Copy, Default)]
pub struct DomainOverride {
    pub dose_max: Option<f64>,
    pub time_max: Option<f64>,
}

pub fn ingest(path: &Path, normalization: Normalization, eps: f64, domain: DomainOverride) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(CliError::io(path))?;
    read_dataset(file, path, normalization, eps, domain)
}

pub fn read_dataset(
    reader: impl std::io::Read,
    path: &Path,
    normalization: Normalization,
    eps: f64,
    domain: DomainOverride,
) -> Result<Dataset> {
    let at = |line: usize, message: String| CliError::Input {
        path: path.to_owned(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| at(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(at(
            header.position().map_or(1, |p| p.line() as usize),
            format!("expected header {}, found {}", HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    let (mut dmax, mut tmax, mut imax, mut jmax, mut kmax) = (0.0f64, 0.0f64, 0, 0, 0);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| at(e.position().map_or(0, |p| p.line() as usize), format!("malformed row: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let r: Row = rec.deserialize(Some(&header)).map_err(|e| at(line, format!("malformed row: {e}")))?;
        if r.particle == 0 || r.outcome == 0 || r.replicate == 0 {
            return Err(at(line, "particle, outcome and replicate labels start at 1".into()));
        }
        if !(r.dose >= 0.0 && r.dose.is_finite() && r.time >= 0.0 && r.time.is_finite()) {
            return Err(at(line, format!("dose and time must be finite and non-negative, got ({}, {})", r.dose, r.time)));
        }
        let y = match normalization {
            Normalization::RawPercent => {
                if !(0.0..=100.0).contains(&r.value) {
                    return Err(at(line, format!("value {} outside [0, 100]", r.value)));
                }
                percent_to_logit(r.value, eps)
            }
            Normalization::Logit => {
                if !r.value.is_finite() {
                    return Err(at(line, format!("value {} is not finite", r.value)));
                }
                r.value
            }
        };
        dmax = dmax.max(r.dose);
        tmax = tmax.max(r.time);
        imax = imax.max(r.particle);
        jmax = jmax.max(r.outcome);
        kmax = kmax.max(r.replicate);
        out.push(Record {
            particle: r.particle - 1,
            outcome: r.outcome - 1,
            replicate: r.replicate - 1,
            dose: r.dose,
            time: r.time,
            y,
        });
    }
    if out.is_empty() {
        return Err(at(1, "no data rows".into()));
    }
    let dims = Dims {
        particles: imax,
        outcomes: jmax,
        replicates: kmax,
    };
    let dom = Domain {
        dose_max: domain.dose_max.unwrap_or(dmax),
        time_max: domain.time_max.unwrap_or(tmax),
    };
    let data = Dataset::new(out, dims, dom).map_err(|e| at(0, e.to_string()))?;
    data.require_complete().map_err(|e| at(0, e.to_string()))?;
    Ok(data)
}

/// Writes `data` in the ingest format with values as percentages, after an
/// optional `# manifest=<hash>` comment line.
pub fn write_dataset(w: impl Write, data: &Dataset, manifest: Option<&str>) -> Result<()> {
    let mut w = w;
    if let Some(h) = manifest {
        writeln!(w, "# manifest={h}").map_err(CliError::io("<dataset>"))?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(HEADER)?;
    for r in data.records() {
        csv.write_record([
            (r.particle + 1).to_string(),
            (r.outcome + 1).to_string(),
            (r.replicate + 1).to_string(),
            r.dose.to_string(),
            r.time.to_string(),
            (100.0 * inv_logit(r.y)).to_string(),
        ])?;
    }
    csv.flush().map_err(CliError::io("<dataset>"))?;
    Ok(())
}
