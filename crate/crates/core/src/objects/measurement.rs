use serde::{Deserialize, Serialize};

use super::{check_psd, sum_matrices, Validate, ValidationReport, TAU_NORM};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Effects of a single measurement setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Povm {
    #[serde(with = "crate::json::matrices")]
    pub effects: Vec<CMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>) -> Result<Self> {
        let p = Self { effects };
        p.validate().into_result()?;
        Ok(p)
    }

    /// The one-outcome measurement `{I}`.
    pub fn trivial(d: usize) -> Self {
        Self { effects: vec![linalg::identity(d)] }
    }

    /// Projective measurement onto the eigenspaces of a Hermitian
    /// observable, eigenvalues in descending order.
    pub fn from_observable(h: &CMatrix) -> Result<Self> {
        let e = linalg::hermitian_eig(h)?;
        let mut effects: Vec<CMatrix> = Vec::new();
        let mut last: Option<f64> = None;
        for (k, &v) in e.values.iter().enumerate() {
            let col = e.vectors.column(k).into_owned();
            let p = linalg::projector(&col);
            match last {
                Some(prev) if (prev - v).abs() < 1e-9 => {
                    *effects.last_mut().expect("non-empty") += p;
                }
                _ => effects.push(p),
            }
            last = Some(v);
        }
        Ok(Self { effects })
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn dim(&self) -> usize {
        self.effects.first().map_or(0, |e| e.nrows())
    }

    /// `Σ_a E_a − I`, maximum entry modulus.
    pub fn normalization_defect(&self) -> f64 {
        let d = self.dim();
        linalg::max_abs_diff(&sum_matrices(d, &self.effects), &linalg::identity(d))
    }

    pub(crate) fn report(&self, r: &mut ValidationReport, prefix: &str) {
        if self.effects.is_empty() {
            r.fail("at least one outcome", prefix);
            return;
        }
        let d = self.dim();
        for (a, e) in self.effects.iter().enumerate() {
            if e.nrows() != d || e.ncols() != d {
                r.fail("common dimension", format!("{prefix}effects[{a}]"));
                return;
            }
            check_psd(r, format!("{prefix}effects[{a}]"), e);
        }
        r.check("normalization", format!("{prefix}effects"), self.normalization_defect(), TAU_NORM);
    }
}

impl Validate for Povm {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new("povm");
        self.report(&mut r, "");
        r
    }
}

/// A finite list of measurements acting on one Hilbert space. Outcome
/// counts may differ between settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub povms: Vec<Povm>,
}

impl MeasurementSet {
    pub fn new(povms: Vec<Povm>) -> Result<Self> {
        let m = Self { povms };
        m.validate().into_result()?;
        Ok(m)
    }

    pub fn from_effects(effects: Vec<Vec<CMatrix>>) -> Result<Self> {
        Self::new(effects.into_iter().map(|effects| Povm { effects }).collect())
    }

    pub fn settings(&self) -> usize {
        self.povms.len()
    }

    pub fn dim(&self) -> usize {
        self.povms.first().map_or(0, |p| p.dim())
    }

    pub fn outcome_counts(&self) -> Vec<usize> {
        self.povms.iter().map(|p| p.outcomes()).collect()
    }

    pub fn effect(&self, x: usize, a: usize) -> &CMatrix {
        &self.povms[x].effects[a]
    }

    /// Applies `f` to every effect, keeping the setting/outcome layout.
    pub fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        Self { povms: self.povms.iter().map(|p| Povm { effects: p.effects.iter().map(&f).collect() }).collect() }
    }

    /// Largest entrywise difference between corresponding effects.
    pub fn max_distance(&self, other: &Self) -> Result<f64> {
        if self.outcome_counts() != other.outcome_counts() {
            return Err(Error::Dimension(format!("outcome layouts differ: {:?} vs {:?}", self.outcome_counts(), other.outcome_counts())));
        }
        let mut worst = 0.0f64;
        for (p, q) in self.povms.iter().zip(&other.povms) {
            for (e, f) in p.effects.iter().zip(&q.effects) {
                worst = worst.max(linalg::max_abs_diff(e, f));
            }
        }
        Ok(worst)
    }

    /// Number of deterministic strategies `Π_x o_x`, saturating.
    pub fn strategy_count(&self) -> usize {
        self.povms.iter().fold(1usize, |acc, p| acc.saturating_mul(p.outcomes()))
    }
}

impl Validate for MeasurementSet {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new("measurement_set");
        if self.povms.is_empty() {
            r.fail("at least one setting", "povms");
            return r;
        }
        let d = self.dim();
        for (x, p) in self.povms.iter().enumerate() {
            if p.dim() != d {
                r.fail("common dimension", format!("povms[{x}]"));
                continue;
            }
            p.report(&mut r, &format!("povms[{x}]."));
        }
        r
    }
}
