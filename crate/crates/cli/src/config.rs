//! Run configuration: a TOML or JSON file mirroring [`RunConfig`], with
//! command-line flags applied on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toxsurf::inference::DEFAULT_GRID_POINTS;
use toxsurf::{PriorConfig, SamplerConfig, TruthSpec};

use crate::error::{CliError, Result};

/// How the `value` column of an input CSV is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Percent positive in `[0, 100]`, logit-transformed after clamping.
    #[default]
    RawPercent,
    /// Already on the logit scale.
    Logit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub warm_start: Option<PathBuf>,
    pub chains: usize,
    /// Points per axis of the evaluation grid.
    pub grid: usize,
    pub normalization: Normalization,
    /// Percentages are clamped into `[eps, 1 - eps]` before the logit.
    pub clamp_eps: f64,
    /// Domain bounds; default to the largest observed dose and time.
    pub dose_max: Option<f64>,
    pub time_max: Option<f64>,
    pub prior: PriorConfig,
    pub sampler: SamplerConfig,
    /// Truth used by `simulate`.
    pub truth: TruthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            out: PathBuf::from("out"),
            warm_start: None,
            chains: 1,
            grid: DEFAULT_GRID_POINTS,
            normalization: Normalization::RawPercent,
            clamp_eps: 1e-4,
            dose_max: None,
            time_max: None,
            prior: PriorConfig::default(),
            sampler: SamplerConfig::default(),
            truth: TruthSpec::default(),
        }
    }
}

impl RunConfig {
    /// Reads a `.toml` or `.json` file; keys left out keep their defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| CliError::Input {
                path: path.to_owned(),
                line: e.line(),
                message: e.to_string(),
            })
        } else {
            toml::from_str(&text).map_err(|e| {
                let line = e
                    .span()
                    .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                    .unwrap_or(0);
                CliError::Input {
                    path: path.to_owned(),
                    line,
                    message: e.message().to_string(),
                }
            })
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(CliError::Usage("--chains must be at least 1".into()));
        }
        if self.grid < 2 {
            return Err(CliError::Usage("--grid must be at least 2".into()));
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.5) {
            return Err(CliError::Usage(format!("clamp_eps must lie in (0, 0.5), got {}", self.clamp_eps)));
        }
        self.prior.validate()?;
        self.sampler.validate()?;
        Ok(())
    }
}
