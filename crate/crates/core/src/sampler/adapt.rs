//! Per-block random-walk widths for the knot updates and their burn-in tuning.

use serde::{Deserialize, Serialize};

use crate::model::prior::ComponentKind;
use crate::model::Domain;

pub const FAMILIES: [ComponentKind; 3] = [ComponentKind::Dose, ComponentKind::Time, ComponentKind::Interaction];

pub(crate) fn family_index(kind: ComponentKind) -> usize {
    match kind {
        ComponentKind::Dose => 0,
        ComponentKind::Time => 1,
        ComponentKind::Interaction => 2,
    }
}

pub(crate) fn family_range(kind: ComponentKind, domain: Domain) -> f64 {
    match kind {
        ComponentKind::Dose => domain.dose_max,
        ComponentKind::Time => domain.time_max,
        ComponentKind::Interaction => domain.interaction_max(),
    }
}

/// Identifies one scalar knot update: `(cell, family, coordinate)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KnotBlock {
    pub cell: usize,
    pub family: ComponentKind,
    pub coord: usize,
}

/// Half-widths of the uniform knot proposals, one per [`KnotBlock`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepWidths {
    widths: Vec<[[f64; 2]; 3]>,
}

impl StepWidths {
    /// Every block of a family starts at `fraction[f]` of its range.
    pub fn new(cells: usize, domain: Domain, fraction: [f64; 3]) -> Self {
        let mut row = [[0.0; 2]; 3];
        for (f, kind) in FAMILIES.iter().enumerate() {
            let w = fraction[f] * family_range(*kind, domain);
            row[f] = [w, w];
        }
        Self { widths: vec![row; cells] }
    }

    pub fn get(&self, b: KnotBlock) -> f64 {
        self.widths[b.cell][family_index(b.family)][b.coord]
    }

    pub fn set(&mut self, b: KnotBlock, w: f64) {
        self.widths[b.cell][family_index(b.family)][b.coord] = w;
    }

    pub fn blocks(&self) -> impl Iterator<Item = KnotBlock> + '_ {
        all_blocks(self.widths.len())
    }
}

pub(crate) fn all_blocks(cells: usize) -> impl Iterator<Item = KnotBlock> {
    (0..cells).flat_map(|cell| {
        FAMILIES
            .into_iter()
            .flat_map(move |family| (0..2).map(move |coord| KnotBlock { cell, family, coord }))
    })
}

/// Attempt and acceptance counts per block.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BlockCounters {
    attempts: Vec<[[u64; 2]; 3]>,
    accepts: Vec<[[u64; 2]; 3]>,
}

impl BlockCounters {
    pub fn new(cells: usize) -> Self {
        Self {
            attempts: vec![[[0; 2]; 3]; cells],
            accepts: vec![[[0; 2]; 3]; cells],
        }
    }

    pub fn record(&mut self, b: KnotBlock, accepted: bool) {
        let f = family_index(b.family);
        self.attempts[b.cell][f][b.coord] += 1;
        if accepted {
            self.accepts[b.cell][f][b.coord] += 1;
        }
    }

    pub fn attempts(&self, b: KnotBlock) -> u64 {
        self.attempts[b.cell][family_index(b.family)][b.coord]
    }

    pub fn accepts(&self, b: KnotBlock) -> u64 {
        self.accepts[b.cell][family_index(b.family)][b.coord]
    }

    pub fn rate(&self, b: KnotBlock) -> Option<f64> {
        let n = self.attempts(b);
        (n > 0).then(|| self.accepts(b) as f64 / n as f64)
    }

    pub fn merge(&mut self, other: &BlockCounters) {
        for (a, b) in self.attempts.iter_mut().zip(&other.attempts) {
            for f in 0..3 {
                for c in 0..2 {
                    a[f][c] += b[f][c];
                }
            }
        }
        for (a, b) in self.accepts.iter_mut().zip(&other.accepts) {
            for f in 0..3 {
                for c in 0..2 {
                    a[f][c] += b[f][c];
                }
            }
        }
    }

    pub fn clear(&mut self) {
        let cells = self.attempts.len();
        *self = Self::new(cells);
    }
}

/// Shrinks widths of blocks accepting below `target[0]` by 0.8 and grows
/// those above `target[1]` by 1.25, based on the counts of the last window.
/// Widths stay within `[1e-6 m, m]` for the family range `m`.
pub fn adapt_step_widths(widths: &mut StepWidths, window: &BlockCounters, target: [f64; 2], domain: Domain) {
    let blocks: Vec<KnotBlock> = widths.blocks().collect();
    for b in blocks {
        let Some(rate) = window.rate(b) else { continue };
        let mut w = widths.get(b);
        if rate < target[0] {
            w *= 0.8;
        } else if rate > target[1] {
            w *= 1.25;
        }
        let m = family_range(b.family, domain);
        widths.set(b, w.clamp(1e-6 * m, m));
    }
}
