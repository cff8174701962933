//! Joint measurability, local-hidden-state models and their noise
//! robustness, decided exactly by semidefinite programs.
//!
//! Both questions share one SDP: find PSD operators `X_λ` indexed by
//! deterministic strategies `λ = (a_1, …, a_X)` with `Σ_λ X_λ = total` and
//! `Σ_{λ: λ(x) = a} X_λ = target_{a|x}`. For joint measurability the total is
//! the identity and the targets are the effects; for LHS models the total
//! is Bob's reduced state and the targets are the assemblage members.
//! Deterministic strategies suffice because every response function is a
//! convex combination of deterministic ones.

mod jm;
mod lhs;
mod parent;
mod robustness;
mod separable;

use serde::{Deserialize, Serialize};

use crate::sdp::{verify_certificate, CertificateReport, SdpProblem, SdpSolution};

pub use jm::{jm_test, jm_test_with, JmOutcome, JmWitness, ParentModel};
pub use lhs::{lhs_test, lhs_test_with, LhsModel, LhsOutcome, SteeringWitness};
pub use parent::{DualWitness, Strategies};
pub use robustness::{
    jm_depolarizing_robustness, jm_robustness, lhs_robustness, Depolarizing, NoiseModel, RobustnessMethod, RobustnessResult,
};
pub use separable::{lhs_to_separable_preparation, separable_preparation_to_lhs, SeparableEnsemble};

/// Default cap on the number of deterministic strategies `Π_x o_x`.
pub const DEFAULT_STRATEGY_CAP: usize = 4096;

#[derive(Debug, Clone, Copy)]
pub struct CompatOptions {
    pub cap: usize,
    pub tol: f64,
}

impl Default for CompatOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_STRATEGY_CAP, tol: 1e-7 }
    }
}

/// A solved SDP kept alongside a result so that it can be re-verified.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpRecord {
    pub problem: SdpProblem,
    pub solution: SdpSolution,
}

impl SdpRecord {
    pub fn verify(&self, tol: f64) -> CertificateReport {
        verify_certificate(&self.problem, &self.solution, tol)
    }
}
