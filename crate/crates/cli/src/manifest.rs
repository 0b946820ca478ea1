//! Run manifests. The hash identifies everything that determines the chain
//! output and nothing else, so re-running a fit reproduces it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toxsurf::model::{Dims, Domain};
use toxsurf::{PriorConfig, SamplerConfig};

use crate::config::Normalization;
use crate::error::Result;

pub const CHAIN_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub schema: u32,
    pub chains: usize,
    pub grid: usize,
    pub normalization: Normalization,
    pub clamp_eps: f64,
    pub dims: Dims,
    pub domain: Domain,
    pub data_sha256: String,
    /// Hash of the warm-start state, if the chains were started from one.
    pub warm_start_sha256: Option<String>,
    pub prior: PriorConfig,
    pub sampler: SamplerConfig,
}

impl Manifest {
    /// Hex sha256 of the manifest's compact JSON form. Field order is fixed
    /// by the struct, so the encoding is canonical.
    pub fn hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(sha256_hex(&bytes))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
