//! Validated domain types: states, measurements, assemblages, channels and
//! pointwise Kraus models, plus the conversions between representations.
//!
//! Types deserialize without checks so that a malformed file can still be
//! loaded and reported on. Constructors (`new`) validate, and every type
//! implements [`Validate`] for an explicit report.

mod assemblage;
mod channel;
mod measurement;
mod model;
mod schmidt;
mod state;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMatrix};

pub use assemblage::{assemblage_from, sandwich, unsandwich, Assemblage};
pub use channel::{apply_channel, choi_of_channel, heisenberg_apply, kraus_of_choi, ChoiMatrix, Instrument, KrausChannel};
pub use measurement::{MeasurementSet, Povm};
pub use model::PointwiseKrausModel;
pub use schmidt::{schmidt_rank, sn_lower_entangled_fraction, sn_upper_from_decomposition, PureDecomposition};
pub use state::DensityState;

/// Tolerance on `Σ_a E_a = I` and on nonsignalling / trace preservation.
pub const TAU_NORM: f64 = 1e-9;
/// Tolerance on unit trace of a density matrix.
pub const TAU_TRACE: f64 = 1e-10;

/// One failed check, with the size of the violation and the tolerance it
/// was held to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub location: String,
    pub magnitude: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub object: String,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn new(object: impl Into<String>) -> Self {
        Self { object: object.into(), violations: Vec::new() }
    }

    /// Records a violation when `magnitude` exceeds `tolerance` or is NaN.
    pub fn check(&mut self, check: &str, location: impl Into<String>, magnitude: f64, tolerance: f64) {
        if magnitude.is_nan() || magnitude > tolerance {
            self.violations.push(Violation { check: check.to_string(), location: location.into(), magnitude, tolerance });
        }
    }

    /// Records a structural failure (wrong shape, empty list, ...).
    pub fn fail(&mut self, check: &str, location: impl Into<String>) {
        self.violations.push(Violation { check: check.to_string(), location: location.into(), magnitude: f64::INFINITY, tolerance: 0.0 });
    }

    pub fn merge(&mut self, prefix: &str, other: ValidationReport) {
        for mut v in other.violations {
            v.location = if v.location.is_empty() { prefix.to_string() } else { format!("{prefix}.{}", v.location) };
            self.violations.push(v);
        }
    }

    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> crate::Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(crate::Error::Report(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "{}: ok", self.object);
        }
        write!(f, "{}: {} violation(s)", self.object, self.violations.len())?;
        for v in &self.violations {
            let at = if v.location.is_empty() { String::new() } else { format!(" at {}", v.location) };
            if v.magnitude.is_finite() {
                write!(f, "\n  {}{at}: {:.3e} > {:.1e}", v.check, v.magnitude, v.tolerance)?;
            } else {
                write!(f, "\n  {}{at}", v.check)?;
            }
        }
        Ok(())
    }
}

pub trait Validate {
    fn validate(&self) -> ValidationReport;
}

/// Appends Hermiticity and positivity checks for a square operator.
pub(crate) fn check_psd(report: &mut ValidationReport, location: impl Into<String>, m: &CMatrix) {
    let location = location.into();
    if !m.is_square() {
        report.fail("square", location);
        return;
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        report.fail("finite entries", location);
        return;
    }
    report.check("hermitian", location.clone(), linalg::hermiticity_defect(m), linalg::TAU_HERM);
    let lmin = linalg::min_eigenvalue(m);
    report.check("positive semidefinite", location, (-lmin).max(0.0), linalg::TAU_PSD);
}

pub(crate) fn sum_matrices<'a>(d: usize, ms: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    ms.into_iter().fold(CMatrix::zeros(d, d), |acc, m| acc + m)
}
