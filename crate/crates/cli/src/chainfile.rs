//! Chain files: JSON lines, one retained draw per line.
//!
//! A chain is written to `chain-<c>.jsonl.partial` and renamed to
//! `chain-<c>.jsonl` only once it completes, so an aborted run leaves its
//! partial draws behind under a name the readers ignore.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toxsurf::HierarchyParams;

use crate::error::{CliError, Result};
use crate::manifest::CHAIN_SCHEMA;

#[derive(Debug, Serialize, Deserialize)]
struct Line<M, D> {
    schema: u32,
    manifest: M,
    chain: usize,
    index: usize,
    draw: D,
}

pub fn chain_path(dir: &Path, chain: usize) -> PathBuf {
    dir.join(format!("chain-{chain}.jsonl"))
}

fn partial_path(dir: &Path, chain: usize) -> PathBuf {
    dir.join(format!("chain-{chain}.jsonl.partial"))
}

pub struct ChainWriter {
    out: BufWriter<File>,
    partial: PathBuf,
    done: PathBuf,
    manifest: String,
    chain: usize,
}

impl ChainWriter {
    pub fn create(dir: &Path, chain: usize, manifest: &str) -> Result<Self> {
        let partial = partial_path(dir, chain);
        let file = File::create(&partial).map_err(CliError::io(&partial))?;
        Ok(Self {
            out: BufWriter::new(file),
            partial,
            done: chain_path(dir, chain),
            manifest: manifest.to_owned(),
            chain,
        })
    }

    pub fn write(&mut self, index: usize, draw: &HierarchyParams) -> Result<()> {
        let line = Line {
            schema: CHAIN_SCHEMA,
            manifest: self.manifest.as_str(),
            chain: self.chain,
            index,
            draw,
        };
        serde_json::to_writer(&mut self.out, &line)?;
        self.out.write_all(b"\n").map_err(CliError::io(&self.partial))
    }

    /// Flushes the partial file and leaves it in place.
    pub fn abandon(mut self) -> Result<PathBuf> {
        self.out.flush().map_err(CliError::io(&self.partial))?;
        Ok(self.partial)
    }

    /// Flushes and renames to the final name.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.out.flush().map_err(CliError::io(&self.partial))?;
        std::fs::rename(&self.partial, &self.done).map_err(CliError::io(&self.done))?;
        Ok(self.done)
    }
}


#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub path: PathBuf,
    pub manifest: Option<String>,
    pub chain: usize,
    pub draws: Vec<HierarchyParams>,
}

pub fn read_chain(path: &Path) -> Result<Chain> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let mut chain = Chain {
        path: path.to_owned(),
        manifest: None,
        chain: 0,
        draws: Vec::new(),
    };
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(CliError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let input = |message: String| CliError::Input {
            path: path.to_owned(),
            line: n + 1,
            message,
        };
        // check the version before committing to the draw layout
        let head: serde_json::Value = serde_json::from_str(&line).map_err(|e| input(e.to_string()))?;
        let found = head.get("schema").and_then(|v| v.as_u64()).ok_or_else(|| input("missing schema field".into()))?;
        if found != CHAIN_SCHEMA as u64 {
            return Err(CliError::Schema {
                path: path.to_owned(),
                expected: CHAIN_SCHEMA,
                found: found as u32,
            });
        }
        let rec: Line<String, HierarchyParams> = serde_json::from_value(head).map_err(|e| input(e.to_string()))?;
        match &chain.manifest {
            None => {
                chain.manifest = Some(rec.manifest);
                chain.chain = rec.chain;
            }
            Some(m) if *m != rec.manifest => {
                return Err(input(format!("manifest {} differs from {m} earlier in the file", rec.manifest)));
            }
            Some(_) => {}
        }
        if rec.index != chain.draws.len() {
            return Err(input(format!("draw index {} out of sequence, expected {}", rec.index, chain.draws.len())));
        }
        chain.draws.push(rec.draw);
    }
    Ok(chain)
}

/// Completed chain files in `dir`, ordered by chain number.
pub fn list_chains(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(CliError::io(dir))? {
        let entry = entry.map_err(CliError::io(dir))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(n) = name.strip_prefix("chain-").and_then(|r| r.strip_suffix(".jsonl")) {
            if let Ok(n) = n.parse::<usize>() {
                found.push((n, entry.path()));
            }
        }
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}
