use serde::{Deserialize, Serialize};

use super::{MeasurementSet, Validate, ValidationReport, TAU_NORM};
use crate::linalg::{self, CMatrix};

/// Finite pointwise Kraus model: branch `λ` occurs with weight `μ(λ)`,
/// compresses with `K_λ : C^d → C^{n_λ}` and then measures `N_{a|x,λ}`.
/// The simulated measurements are `Σ_λ μ(λ) K_λ* N_{a|x,λ} K_λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseKrausModel {
    pub weights: Vec<f64>,
    #[serde(with = "crate::json::matrices")]
    pub kraus_ops: Vec<CMatrix>,
    pub rank_bound: usize,
    /// One measurement set per branch, acting on the branch output space.
    pub local_measurements: Vec<MeasurementSet>,
    /// Optional per-branch bases (columns) in which the branch
    /// measurements were transposed when the model was built from a
    /// preparation; `None` when no transpose is involved.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::json::opt_matrices")]
    pub transpose_bases: Option<Vec<CMatrix>>,
}

impl PointwiseKrausModel {
    pub fn branches(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.kraus_ops.first().map_or(0, |k| k.ncols())
    }

    /// `Σ_λ μ(λ) K_λ* K_λ`.
    pub fn completeness(&self) -> CMatrix {
        let d = self.input_dim();
        self.weights.iter().zip(&self.kraus_ops).fold(CMatrix::zeros(d, d), |acc, (w, k)| acc + (k.adjoint() * k).scale(*w))
    }
}

impl Validate for PointwiseKrausModel {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new("pointwise_kraus_model");
        let n = self.weights.len();
        if n == 0 {
            r.fail("at least one branch", "weights");
            return r;
        }
        if self.kraus_ops.len() != n || self.local_measurements.len() != n {
            r.fail("one Kraus operator and one measurement set per weight", "");
            return r;
        }
        if let Some(b) = &self.transpose_bases {
            if b.len() != n {
                r.fail("one transpose basis per branch", "transpose_bases");
            }
        }
        for (l, &w) in self.weights.iter().enumerate() {
            r.check("non-negative weight", format!("weights[{l}]"), (-w).max(0.0), 1e-12);
        }
        let total: f64 = self.weights.iter().sum();
        r.check("weights sum to one", "weights", (total - 1.0).abs(), TAU_NORM);

        let d = self.input_dim();
        if self.kraus_ops.iter().any(|k| k.ncols() != d) {
            r.fail("common input dimension", "kraus_ops");
            return r;
        }
        let layout = self.local_measurements[0].outcome_counts();
        for (l, (k, ms)) in self.kraus_ops.iter().zip(&self.local_measurements).enumerate() {
            let rank = linalg::rank(k, linalg::RANK_TOL);
            r.check("rank bound", format!("kraus_ops[{l}]"), rank as f64, self.rank_bound as f64);
            if ms.dim() != k.nrows() {
                r.fail("measurement acts on the branch output", format!("local_measurements[{l}]"));
                continue;
            }
            if ms.outcome_counts() != layout {
                r.fail("common setting/outcome layout", format!("local_measurements[{l}]"));
                continue;
            }
            r.merge(&format!("local_measurements[{l}]"), ms.validate());
        }
        r.check("Σ μ K*K = I", "kraus_ops", linalg::max_abs_diff(&self.completeness(), &linalg::identity(d)), TAU_NORM);
        r
    }
}
