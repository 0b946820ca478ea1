use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One logit-scale observation. Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub particle: usize,
    pub outcome: usize,
    pub replicate: usize,
    pub dose: f64,
    pub time: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub particles: usize,
    pub outcomes: usize,
    pub replicates: usize,
}

impl Dims {
    pub fn cells(&self) -> usize {
        self.particles * self.outcomes
    }

    #[inline]
    pub fn cell(&self, particle: usize, outcome: usize) -> usize {
        particle * self.outcomes + outcome
    }

    /// Inverse of [`Dims::cell`].
    #[inline]
    pub fn split(&self, cell: usize) -> (usize, usize) {
        (cell / self.outcomes, cell % self.outcomes)
    }
}

/// Design bounds `D` (dose) and `T` (time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub dose_max: f64,
    pub time_max: f64,
}

impl Domain {
    pub fn interaction_max(&self) -> f64 {
        self.dose_max * self.time_max
    }

    fn validate(&self) -> Result<()> {
        for (what, v) in [("D", self.dose_max), ("T", self.time_max)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(what, v, "domain bound must be positive"));
            }
        }
        Ok(())
    }
}

/// Column-oriented observations of one (particle, outcome) cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellData {
    pub dose: Vec<f64>,
    pub time: Vec<f64>,
    pub y: Vec<f64>,
}

impl CellData {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    dims: Dims,
    domain: Domain,
    dose_grid: Vec<f64>,
    time_grid: Vec<f64>,
    cells: Vec<CellData>,
}

fn unique_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

impl Dataset {
    /// Builds a dataset, checking indices, domain membership and that every
    /// populated cell has at least two distinct doses and two distinct times.
    /// Cells without records are allowed (see [`Dataset::require_complete`]).
    pub fn new(records: Vec<Record>, dims: Dims, domain: Domain) -> Result<Self> {
        domain.validate()?;
        if dims.particles == 0 || dims.outcomes == 0 {
            return Err(Error::Data("at least one particle and one outcome required".into()));
        }
        let mut cells = vec![CellData::default(); dims.cells()];
        for (n, r) in records.iter().enumerate() {
            if r.particle >= dims.particles || r.outcome >= dims.outcomes {
                return Err(Error::Data(format!(
                    "record {n}: cell ({}, {}) outside dims {}x{}",
                    r.particle + 1,
                    r.outcome + 1,
                    dims.particles,
                    dims.outcomes
                )));
            }
            if !(0.0..=domain.dose_max).contains(&r.dose) || !(0.0..=domain.time_max).contains(&r.time) {
                return Err(Error::Data(format!(
                    "record {n}: (dose, time) = ({}, {}) outside [0, {}] x [0, {}]",
                    r.dose, r.time, domain.dose_max, domain.time_max
                )));
            }
            if !r.y.is_finite() {
                return Err(Error::Data(format!("record {n}: non-finite response")));
            }
            let c = &mut cells[dims.cell(r.particle, r.outcome)];
            c.dose.push(r.dose);
            c.time.push(r.time);
            c.y.push(r.y);
        }
        for (k, c) in cells.iter().enumerate() {
            if c.is_empty() {
                continue;
            }
            let nd = unique_sorted(c.dose.clone()).len();
            let nt = unique_sorted(c.time.clone()).len();
            if nd < 2 || nt < 2 {
                let (i, j) = dims.split(k);
                return Err(Error::Data(format!(
                    "cell ({}, {}) has {nd} distinct doses and {nt} distinct times; at least 2 of each needed",
                    i + 1,
                    j + 1
                )));
            }
        }
        let dose_grid = unique_sorted(records.iter().map(|r| r.dose).collect());
        let time_grid = unique_sorted(records.iter().map(|r| r.time).collect());
        Ok(Self {
            records,
            dims,
            domain,
            dose_grid,
            time_grid,
            cells,
        })
    }

    /// A dataset with no observations; the sampler then targets the prior.
    pub fn empty(dims: Dims, domain: Domain) -> Result<Self> {
        Self::new(Vec::new(), dims, domain)
    }

    /// Errors if any cell has no observations.
    pub fn require_complete(&self) -> Result<()> {
        match self.cells.iter().position(CellData::is_empty) {
            Some(k) => {
                let (i, j) = self.dims.split(k);
                Err(Error::Data(format!(
                    "no observations for particle {} outcome {}",
                    i + 1,
                    j + 1
                )))
            }
            None => Ok(()),
        }
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dose_grid(&self) -> &[f64] {
        &self.dose_grid
    }

    pub fn time_grid(&self) -> &[f64] {
        &self.time_grid
    }

    pub fn cell(&self, particle: usize, outcome: usize) -> &CellData {
        &self.cells[self.dims.cell(particle, outcome)]
    }

    pub fn cells(&self) -> &[CellData] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of records belonging to `particle`.
    pub fn particle_count(&self, particle: usize) -> usize {
        (0..self.dims.outcomes).map(|j| self.cell(particle, j).len()).sum()
    }

    /// Number of records belonging to `outcome`.
    pub fn outcome_count(&self, outcome: usize) -> usize {
        (0..self.dims.particles).map(|i| self.cell(i, outcome).len()).sum()
    }
}
