use serde::{Deserialize, Serialize};

use super::{seesaw_n_prep, SeesawOptions};
use crate::compat::{jm_test_with, CompatOptions};
use crate::error::{Error, Result};
use crate::objects::{sandwich, DensityState, MeasurementSet};

/// Visibility above which a see-saw model counts as reproducing the set.
const FOUND: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntryStatus {
    /// Decided exactly: by the parent-POVM SDP at `n = 1`, or trivially for
    /// `n ≥ d`.
    Certified { simulable: bool },
    /// See-saw lower bound. `found = false` is not a proof of anything.
    Heuristic { visibility: f64, found: bool, converged: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionEntry {
    pub n: usize,
    pub status: EntryStatus,
}

impl CompressionEntry {
    pub fn simulable(&self) -> bool {
        match self.status {
            EntryStatus::Certified { simulable } => simulable,
            EntryStatus::Heuristic { found, .. } => found,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub entries: Vec<CompressionEntry>,
    /// Smallest `n` with a certified or explicitly found model.
    pub min_n: Option<usize>,
}

/// Per-`n` simulability report for `n = 1..=n_max`. The `n = 1` entry is
/// exact; entries with `2 ≤ n < d` come from the see-saw on the sandwich
/// of `ms` by `sigma` and can only ever confirm simulability.
pub fn min_compression_dim(
    ms: &MeasurementSet,
    sigma: &DensityState,
    n_max: usize,
    compat: CompatOptions,
    seesaw: &SeesawOptions,
) -> Result<CompressionReport> {
    if n_max == 0 {
        return Err(Error::Validation("n_max must be at least 1".into()));
    }
    let d = ms.dim();
    let asm = sandwich(sigma, ms)?;
    let mut entries = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let status = if n == 1 {
            EntryStatus::Certified { simulable: jm_test_with(ms, compat)?.is_compatible() }
        } else if n >= d {
            EntryStatus::Certified { simulable: true }
        } else {
            let r = seesaw_n_prep(&asm, n, seesaw)?;
            EntryStatus::Heuristic { visibility: r.visibility, found: r.visibility >= FOUND, converged: r.converged }
        };
        entries.push(CompressionEntry { n, status });
    }
    let min_n = entries.iter().find(|e| e.simulable()).map(|e| e.n);
    Ok(CompressionReport { entries, min_n })
}
