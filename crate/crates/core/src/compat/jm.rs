use serde::{Deserialize, Serialize};

use super::parent::{self, Decision, DualWitness};
use super::{CompatOptions, SdpRecord};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::objects::{check_psd, sum_matrices, MeasurementSet, Validate, ValidationReport, TAU_NORM};

/// Parent POVM `G_λ` with response kernel `p(a|x,λ)`, so that
/// `M_{a|x} = Σ_λ p(a|x,λ) G_λ`. Models produced by [`jm_test`] have
/// deterministic kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentModel {
    #[serde(with = "crate::json::matrices")]
    pub parent: Vec<CMatrix>,
    /// `response[λ][x][a]`.
    pub response: Vec<Vec<Vec<f64>>>,
}

pub type JmWitness = DualWitness;

impl ParentModel {
    pub fn dim(&self) -> usize {
        self.parent.first().map_or(0, |g| g.nrows())
    }

    pub fn outcome_counts(&self) -> Vec<usize> {
        self.response.first().map_or(Vec::new(), |r| r.iter().map(|row| row.len()).collect())
    }

    /// `M_{a|x} = Σ_λ p(a|x,λ) G_λ`, without validation.
    pub fn reconstruct_effects(&self) -> Vec<Vec<CMatrix>> {
        let d = self.dim();
        let counts = self.outcome_counts();
        let mut out: Vec<Vec<CMatrix>> = counts.iter().map(|&o| vec![CMatrix::zeros(d, d); o]).collect();
        for (g, kernel) in self.parent.iter().zip(&self.response) {
            for (x, row) in kernel.iter().enumerate() {
                for (a, &p) in row.iter().enumerate() {
                    if p != 0.0 {
                        out[x][a] += g.scale(p);
                    }
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Result<MeasurementSet> {
        MeasurementSet::from_effects(self.reconstruct_effects())
    }
}

impl Validate for ParentModel {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new("parent_model");
        if self.parent.is_empty() || self.parent.len() != self.response.len() {
            r.fail("one response row per parent effect", "response");
            return r;
        }
        let d = self.dim();
        let counts = self.outcome_counts();
        for (l, (g, kernel)) in self.parent.iter().zip(&self.response).enumerate() {
            if g.nrows() != d || g.ncols() != d {
                r.fail("square effects of a common dimension", format!("parent[{l}]"));
                continue;
            }
            check_psd(&mut r, format!("parent[{l}]"), g);
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
            let total = sum_matrices(d, &self.parent);
            r.check("Σ G = I", "parent", linalg::max_abs_diff(&total, &linalg::identity(d)), TAU_NORM);
        }
        r
    }
}

#[derive(Debug, Clone)]
pub enum JmOutcome {
    Compatible { model: ParentModel, record: SdpRecord },
    Incompatible { witness: JmWitness, record: SdpRecord },
}

impl JmOutcome {
    pub fn is_compatible(&self) -> bool {
        matches!(self, Self::Compatible { .. })
    }

    pub fn record(&self) -> &SdpRecord {
        match self {
            Self::Compatible { record, .. } | Self::Incompatible { record, .. } => record,
        }
    }
}

pub fn jm_test(ms: &MeasurementSet) -> Result<JmOutcome> {
    jm_test_with(ms, CompatOptions::default())
}

/// Decides joint measurability with a parent POVM over deterministic
/// strategies. Refuses when `Π_x o_x` exceeds `opts.cap`.
pub fn jm_test_with(ms: &MeasurementSet, opts: CompatOptions) -> Result<JmOutcome> {
    let d = ms.dim();
    if ms.settings() == 0 {
        return Err(Error::Validation("measurement set has no settings".into()));
    }
    let targets: Vec<Vec<CMatrix>> = ms.povms.iter().map(|p| p.effects.clone()).collect();
    match parent::decide(&linalg::identity(d), &targets, opts)? {
        Decision::Feasible { blocks, strategies, record } => {
            let (kept, parent) = parent::clean_blocks(blocks, &linalg::identity(d))?;
            let response = kept.iter().map(|&l| strategies.kernel(l)).collect();
            Ok(JmOutcome::Compatible { model: ParentModel { parent, response }, record })
        }
        Decision::Infeasible { witness, record } => Ok(JmOutcome::Incompatible { witness, record }),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::{c, C64};
    use crate::objects::Povm;

    fn pauli(k: usize) -> CMatrix {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match k {
            0 => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            1 => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            _ => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }

    pub(crate) fn sharp(k: usize) -> Povm {
        Povm::from_observable(&pauli(k)).unwrap()
    }

    #[test]
    fn commuting_projective_pair_is_compatible() {
        let z = sharp(2);
        let ms = MeasurementSet::new(vec![z.clone(), Povm { effects: z.effects.iter().rev().cloned().collect() }]).unwrap();
        let out = jm_test(&ms).unwrap();
        let JmOutcome::Compatible { model, record } = out else { panic!("expected compatible") };
        assert!(model.validate().is_ok());
        assert!(model.reconstruct().unwrap().max_distance(&ms).unwrap() < 1e-7);
        assert!(record.verify(1e-7).ok);
    }

    #[test]
    fn duplicated_povm_is_compatible() {
        let trine: Vec<CMatrix> = (0..3)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                let v = crate::linalg::CVector::from_vec(vec![c(t.cos(), 0.0), c(t.sin(), 0.0)]);
                (&v * v.adjoint()).scale(2.0 / 3.0)
            })
            .collect();
        let ms = MeasurementSet::from_effects(vec![trine.clone(), trine]).unwrap();
        let JmOutcome::Compatible { model, .. } = jm_test(&ms).unwrap() else { panic!() };
        assert!(model.reconstruct().unwrap().max_distance(&ms).unwrap() < 1e-7);
    }

    #[test]
    fn sharp_x_and_z_are_incompatible_with_certified_witness() {
        let ms = MeasurementSet::new(vec![sharp(0), sharp(2)]).unwrap();
        let JmOutcome::Incompatible { witness, record } = jm_test(&ms).unwrap() else { panic!("expected incompatible") };
        assert!(record.verify(1e-7).ok);
        assert!(witness.margin > 0.0);
        let targets: Vec<Vec<CMatrix>> = ms.povms.iter().map(|p| p.effects.clone()).collect();
        let v = witness.evaluate(&linalg::identity(2), &targets);
        assert!((v - witness.value).abs() < 1e-12);
        // The same witness must not flag a compatible (fully depolarized) set.
        let trivial: Vec<Vec<CMatrix>> =
            targets.iter().map(|row| row.iter().map(|e| linalg::identity(2).scale(e.trace().re / 2.0)).collect()).collect();
        let bound = 2.0 * witness.max_eigenvalue.max(0.0);
        assert!(witness.evaluate(&linalg::identity(2), &trivial) <= bound + 1e-9);
    }

    #[test]
    fn cap_is_an_explicit_refusal() {
        let ms = MeasurementSet::new(vec![sharp(0), sharp(2), sharp(1)]).unwrap();
        let opts = CompatOptions { cap: 4, ..CompatOptions::default() };
        assert!(matches!(jm_test_with(&ms, opts), Err(Error::CapExceeded { count: 8, cap: 4 })));
    }
}
