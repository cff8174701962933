use serde::{Deserialize, Serialize};

use super::{check_psd, Validate, ValidationReport, TAU_TRACE};
use crate::error::Result;
use crate::linalg::{self, CMatrix, CVector};

/// Density matrix: positive semidefinite with unit trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityState {
    #[serde(with = "crate::json::matrix")]
    pub matrix: CMatrix,
}

impl DensityState {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let s = Self { matrix };
        s.validate().into_result()?;
        Ok(s)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: linalg::identity(d).unscale(d as f64) }
    }

    /// `|v⟩⟨v| / ‖v‖²`.
    pub fn pure(v: &CVector) -> Self {
        let n2 = v.norm_squared();
        Self { matrix: linalg::projector(v).unscale(n2) }
    }

    /// Gibbs state of the truncated oscillator, `∝ Σ_k e^{-βk} |k⟩⟨k|`.
    pub fn thermal(d: usize, beta: f64) -> Self {
        let w: Vec<f64> = (0..d).map(|k| (-beta * k as f64).exp()).collect();
        let z: f64 = w.iter().sum();
        let diag = CVector::from_iterator(d, w.iter().map(|x| linalg::c(x / z, 0.0)));
        Self { matrix: CMatrix::from_diagonal(&diag) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_full_rank(&self, rank_tol: f64) -> bool {
        let e = linalg::eig_unchecked(&self.matrix);
        e.min() > rank_tol * e.max()
    }
}

impl Validate for DensityState {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new("density_state");
        if self.matrix.nrows() == 0 {
            r.fail("non-empty", "matrix");
            return r;
        }
        check_psd(&mut r, "matrix", &self.matrix);
        if self.matrix.is_square() {
            r.check("unit trace", "matrix", (self.matrix.trace().re - 1.0).abs(), TAU_TRACE);
        }
        r
    }
}
