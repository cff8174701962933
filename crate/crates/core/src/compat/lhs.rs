use serde::{Deserialize, Serialize};

use super::parent::{self, Decision, DualWitness};
use super::{CompatOptions, SdpRecord};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::objects::{check_psd, sum_matrices, Assemblage, Validate, ValidationReport, TAU_NORM};

/// Hidden states `T_λ` with response `p(a|x,λ)`, so that
/// `σ_{a|x} = Σ_λ p(a|x,λ) T_λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhsModel {
    #[serde(with = "crate::json::matrices")]
    pub hidden_states: Vec<CMatrix>,
    /// `response[λ][x][a]`.
    pub response: Vec<Vec<Vec<f64>>>,
}

pub type SteeringWitness = DualWitness;

impl LhsModel {
    pub fn dim(&self) -> usize {
        self.hidden_states.first().map_or(0, |t| t.nrows())
    }

    pub fn outcome_counts(&self) -> Vec<usize> {
        self.response.first().map_or(Vec::new(), |r| r.iter().map(|row| row.len()).collect())
    }

    pub fn total(&self) -> CMatrix {
        sum_matrices(self.dim(), &self.hidden_states)
    }

    /// `σ_{a|x} = Σ_λ p(a|x,λ) T_λ`, without validation.
    pub fn reconstruct_members(&self) -> Vec<Vec<CMatrix>> {
        let d = self.dim();
        let mut out: Vec<Vec<CMatrix>> = self.outcome_counts().iter().map(|&o| vec![CMatrix::zeros(d, d); o]).collect();
        for (t, kernel) in self.hidden_states.iter().zip(&self.response) {
            for (x, row) in kernel.iter().enumerate() {
                for (a, &p) in row.iter().enumerate() {
                    if p != 0.0 {
                        out[x][a] += t.scale(p);
                    }
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Result<Assemblage> {
        Assemblage::new(self.reconstruct_members(), self.total())
    }
}

impl Validate for LhsModel {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new("lhs_model");
        if self.hidden_states.is_empty() || self.hidden_states.len() != self.response.len() {
            r.fail("one response row per hidden state", "response");
            return r;
        }
        let d = self.dim();
        let counts = self.outcome_counts();
        for (l, (t, kernel)) in self.hidden_states.iter().zip(&self.response).enumerate() {
            if t.nrows() != d || t.ncols() != d {
                r.fail("square states of a common dimension", format!("hidden_states[{l}]"));
                continue;
            }
            check_psd(&mut r, format!("hidden_states[{l}]"), t);
            if kernel.iter().map(|row| row.len()).collect::<Vec<_>>() != counts {
                r.fail("common setting/outcome layout", format!("response[{l}]"));
                continue;
            }
            for (x, row) in kernel.iter().enumerate() {
                let neg = row.iter().fold(0.0f64, |m, &p| m.max(-p));
                r.check("non-negative response", format!("response[{l}][{x}]"), neg, 1e-12);
                let s: f64 = row.iter().sum();
                r.check("response sums to one", format!("response[{l}][{x}]"), (s - 1.0).abs(), TAU_NORM);
            }
        }
        if r.is_ok() {
            r.check("unit total trace", "hidden_states", (self.total().trace().re - 1.0).abs(), TAU_NORM);
        }
        r
    }
}

#[derive(Debug, Clone)]
pub enum LhsOutcome {
    Unsteerable { model: LhsModel, record: SdpRecord },
    Steerable { witness: SteeringWitness, record: SdpRecord },
}

impl LhsOutcome {
    pub fn is_unsteerable(&self) -> bool {
        matches!(self, Self::Unsteerable { .. })
    }

    pub fn record(&self) -> &SdpRecord {
        match self {
            Self::Unsteerable { record, .. } | Self::Steerable { record, .. } => record,
        }
    }
}

pub fn lhs_test(asm: &Assemblage) -> Result<LhsOutcome> {
    lhs_test_with(asm, CompatOptions::default())
}

/// Decides whether `asm` admits an LHS model with hidden states indexed by
/// deterministic strategies.
pub fn lhs_test_with(asm: &Assemblage, opts: CompatOptions) -> Result<LhsOutcome> {
    if asm.settings() == 0 {
        return Err(Error::Validation("assemblage has no settings".into()));
    }
    match parent::decide(&asm.total, &asm.members, opts)? {
        Decision::Feasible { blocks, strategies, record } => {
            let (kept, hidden_states) = parent::clean_blocks(blocks, &asm.total)?;
            let response = kept.iter().map(|&l| strategies.kernel(l)).collect();
            Ok(LhsOutcome::Unsteerable { model: LhsModel { hidden_states, response }, record })
        }
        Decision::Infeasible { witness, record } => Ok(LhsOutcome::Steerable { witness, record }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::jm::tests::sharp;
    use crate::linalg::{self, BipartiteShape};
    use crate::objects::{assemblage_from, sandwich, DensityState, MeasurementSet};
    use crate::random;

    #[test]
    fn product_state_is_unsteerable() {
        let mut rng = random::rng(3);
        let a = random::density(2, 2, &mut rng);
        let b = random::density(2, 2, &mut rng);
        let ms = MeasurementSet::new(vec![sharp(0), sharp(2)]).unwrap();
        let asm = assemblage_from(&linalg::kron(&a, &b), BipartiteShape::new(2, 2), &ms).unwrap();
        let LhsOutcome::Unsteerable { model, record } = lhs_test(&asm).unwrap() else { panic!() };
        assert!(model.validate().is_ok());
        assert!(model.reconstruct().unwrap().max_distance(&asm).unwrap() < 1e-7);
        assert!(record.verify(1e-7).ok);
    }

    #[test]
    fn members_proportional_to_total_are_unsteerable() {
        let sigma = DensityState::thermal(3, 0.7);
        let members = vec![
            vec![sigma.matrix.scale(0.25), sigma.matrix.scale(0.75)],
            vec![sigma.matrix.scale(0.5), sigma.matrix.scale(0.2), sigma.matrix.scale(0.3)],
        ];
        let asm = Assemblage::new(members, sigma.matrix.clone()).unwrap();
        assert!(lhs_test(&asm).unwrap().is_unsteerable());
    }

    #[test]
    fn sandwiched_sharp_pair_is_steerable() {
        let ms = MeasurementSet::new(vec![sharp(0), sharp(2)]).unwrap();
        let asm = sandwich(&DensityState::maximally_mixed(2), &ms).unwrap();
        let LhsOutcome::Steerable { witness, record } = lhs_test(&asm).unwrap() else { panic!() };
        assert!(witness.margin > 0.0);
        assert!(record.verify(1e-7).ok);
    }
}
