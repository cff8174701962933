use serde::{Deserialize, Serialize};

use super::{check_psd, sum_matrices, DensityState, MeasurementSet, Povm, Validate, ValidationReport, TAU_NORM};
use crate::error::{Error, Result};
use crate::linalg::{self, BipartiteShape, CMatrix, Side};

/// Setting-indexed families of subnormalized states `σ_{a|x}` on Bob's
/// side sharing the common total `σ = Σ_a σ_{a|x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assemblage {
    #[serde(with = "crate::json::matrices2")]
    pub members: Vec<Vec<CMatrix>>,
    #[serde(with = "crate::json::matrix")]
    pub total: CMatrix,
}

impl Assemblage {
    pub fn new(members: Vec<Vec<CMatrix>>, total: CMatrix) -> Result<Self> {
        let a = Self { members, total };
        a.validate().into_result()?;
        Ok(a)
    }

    pub fn settings(&self) -> usize {
        self.members.len()
    }

    pub fn dim(&self) -> usize {
        self.total.nrows()
    }

    pub fn outcome_counts(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.len()).collect()
    }

    pub fn strategy_count(&self) -> usize {
        self.members.iter().fold(1usize, |acc, m| acc.saturating_mul(m.len()))
    }

    pub fn max_distance(&self, other: &Self) -> Result<f64> {
        if self.outcome_counts() != other.outcome_counts() || self.dim() != other.dim() {
            return Err(Error::Dimension("assemblage layouts differ".into()));
        }
        let mut worst = linalg::max_abs_diff(&self.total, &other.total);
        for (p, q) in self.members.iter().zip(&other.members) {
            for (e, f) in p.iter().zip(q) {
                worst = worst.max(linalg::max_abs_diff(e, f));
            }
        }
        Ok(worst)
    }

    /// `v σ_{a|x} + (1 − v) tr(σ_{a|x}) σ`.
    pub fn depolarized(&self, v: f64) -> Self {
        let members =
            self.members.iter().map(|row| row.iter().map(|m| m.scale(v) + self.total.scale((1.0 - v) * m.trace().re)).collect()).collect();
        Self { members, total: self.total.clone() }
    }
}

impl Validate for Assemblage {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new("assemblage");
        let total = DensityState { matrix: self.total.clone() };
        r.merge("total", total.validate());
        if self.members.is_empty() {
            r.fail("at least one setting", "members");
        }
        let d = self.dim();
        for (x, row) in self.members.iter().enumerate() {
            if row.is_empty() {
                r.fail("at least one outcome", format!("members[{x}]"));
                continue;
            }
            if row.iter().any(|m| m.nrows() != d || m.ncols() != d) {
                r.fail("common dimension", format!("members[{x}]"));
                continue;
            }
            for (a, m) in row.iter().enumerate() {
                check_psd(&mut r, format!("members[{x}][{a}]"), m);
            }
            let s = sum_matrices(d, row);
            r.check("nonsignalling", format!("members[{x}]"), linalg::max_abs_diff(&s, &self.total), TAU_NORM);
        }
        r
    }
}

/// `σ_{a|x} = tr_A[(A_{a|x} ⊗ I) ρ]` for a state on `A ⊗ B` and
/// measurements on `A`.
pub fn assemblage_from(rho: &CMatrix, shape: BipartiteShape, ms: &MeasurementSet) -> Result<Assemblage> {
    if ms.dim() != shape.dim_a {
        return Err(Error::Dimension(format!("measurements act on dimension {}, state has A-dimension {}", ms.dim(), shape.dim_a)));
    }
    let total = linalg::partial_trace(rho, shape, Side::A)?;
    let members = ms
        .povms
        .iter()
        .map(|p| p.effects.iter().map(|e| reduce_with(rho, shape, e)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(Assemblage { members, total })
}

/// `tr_A[(e ⊗ I) ρ]` computed without forming the Kronecker product.
pub(crate) fn reduce_with(rho: &CMatrix, shape: BipartiteShape, e: &CMatrix) -> Result<CMatrix> {
    let (da, db) = (shape.dim_a, shape.dim_b);
    if rho.nrows() != da * db || e.nrows() != da {
        return Err(Error::Dimension("reduce_with: shape mismatch".into()));
    }
    Ok(CMatrix::from_fn(db, db, |i, j| {
        let mut acc = linalg::ZERO;
        for a1 in 0..da {
            for a2 in 0..da {
                let w = e[(a2, a1)];
                if w != linalg::ZERO {
                    acc += w * rho[(a1 * db + i, a2 * db + j)];
                }
            }
        }
        acc
    }))
}

/// `σ_{a|x} = σ^{1/2} M_{a|x} σ^{1/2}`. Needs a full-rank `σ`.
pub fn sandwich(sigma: &DensityState, ms: &MeasurementSet) -> Result<Assemblage> {
    if sigma.dim() != ms.dim() {
        return Err(Error::Dimension(format!("state dimension {} differs from measurement dimension {}", sigma.dim(), ms.dim())));
    }
    // Full rank is required for the inverse direction to exist.
    linalg::inv_sqrt(&sigma.matrix, linalg::RANK_TOL)?;
    let root = linalg::matrix_sqrt(&sigma.matrix)?;
    let members = ms.povms.iter().map(|p| p.effects.iter().map(|m| linalg::hermitian_part(&(&root * m * &root))).collect()).collect();
    Ok(Assemblage { members, total: sigma.matrix.clone() })
}

/// `M_{a|x} = σ^{-1/2} σ_{a|x} σ^{-1/2}`. Needs a full-rank total.
pub fn unsandwich(asm: &Assemblage) -> Result<MeasurementSet> {
    let inv = linalg::inv_sqrt(&asm.total, linalg::RANK_TOL)?;
    let povms =
        asm.members.iter().map(|row| Povm { effects: row.iter().map(|m| linalg::hermitian_part(&(&inv * m * &inv))).collect() }).collect();
    Ok(MeasurementSet { povms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, kron, CVector, ONE, ZERO};
    use crate::random;

    fn pauli(k: usize) -> CMatrix {
        match k {
            0 => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            1 => CMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]),
            _ => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    fn pauli_set() -> MeasurementSet {
        MeasurementSet::new((0..3).map(|k| Povm::from_observable(&pauli(k)).unwrap()).collect()).unwrap()
    }

    #[test]
    fn product_state_gives_product_assemblage() {
        let mut r = random::rng(5);
        let ra = random::density(2, 2, &mut r);
        let rb = random::density(3, 2, &mut r);
        let asm = assemblage_from(&kron(&ra, &rb), BipartiteShape::new(2, 3), &pauli_set()).unwrap();
        for (x, row) in asm.members.iter().enumerate() {
            for (a, m) in row.iter().enumerate() {
                let p = linalg::trace_product(pauli_set().effect(x, a), &ra);
                assert!((m - rb.scale(p)).norm() < 1e-12);
            }
        }
        assert!(asm.validate().is_ok());
    }

    #[test]
    fn bell_state_gives_transposed_projectors() {
        let s = 1.0 / 2f64.sqrt();
        let bell = CVector::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        let ms = pauli_set();
        let asm = assemblage_from(&linalg::projector(&bell), BipartiteShape::new(2, 2), &ms).unwrap();
        for x in 0..3 {
            for a in 0..2 {
                let expected = ms.effect(x, a).transpose().scale(0.5);
                assert!((&asm.members[x][a] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn trivial_measurement_returns_marginal() {
        let mut r = random::rng(6);
        let rho = random::density(6, 3, &mut r);
        let ms = MeasurementSet::new(vec![Povm::trivial(2)]).unwrap();
        let asm = assemblage_from(&rho, BipartiteShape::new(2, 3), &ms).unwrap();
        let marg = linalg::partial_trace(&rho, BipartiteShape::new(2, 3), Side::A).unwrap();
        assert!((&asm.members[0][0] - marg).norm() < 1e-12);
    }

    #[test]
    fn sandwich_with_maximally_mixed_divides_by_d() {
        let ms = pauli_set();
        let asm = sandwich(&DensityState::maximally_mixed(2), &ms).unwrap();
        assert!((&asm.members[1][0] - ms.effect(1, 0).scale(0.5)).norm() < 1e-12);
    }

    #[test]
    fn sandwich_round_trip_qutrit() {
        let mut r = random::rng(7);
        for _ in 0..5 {
            let sigma = DensityState::new(random::full_rank_density(3, &mut r)).unwrap();
            let ms = MeasurementSet::from_effects(vec![random::povm(3, 3, &mut r), random::povm(3, 2, &mut r)]).unwrap();
            let asm = sandwich(&sigma, &ms).unwrap();
            assert!(asm.validate().is_ok());
            let back = unsandwich(&asm).unwrap();
            assert!(back.max_distance(&ms).unwrap() < 1e-10);
        }
    }

    #[test]
    fn sandwich_rejects_rank_deficient() {
        let v = CVector::from_vec(vec![ONE, ZERO]);
        let err = sandwich(&DensityState::pure(&v), &pauli_set()).unwrap_err();
        assert!(err.to_string().contains("smallest eigenvalue"), "{err}");
    }

    #[test]
    fn purification_assemblage_is_transposed_sandwich() {
        let mut r = random::rng(8);
        let sigma = random::full_rank_density(3, &mut r);
        let psi = linalg::purify(&sigma).unwrap();
        let ms = MeasurementSet::from_effects(vec![random::povm(3, 3, &mut r)]).unwrap();
        let asm = assemblage_from(&linalg::projector(&psi), BipartiteShape::new(3, 3), &ms).unwrap();
        let basis = linalg::hermitian_eig(&sigma).unwrap().vectors;
        let root = linalg::matrix_sqrt(&sigma).unwrap();
        for a in 0..3 {
            let mt = linalg::transpose_in_basis(ms.effect(0, a), &basis);
            assert!((&asm.members[0][a] - &root * mt * &root).norm() < 1e-9);
        }
    }

    #[test]
    fn depolarized_keeps_total() {
        let asm = sandwich(&DensityState::maximally_mixed(2), &pauli_set()).unwrap();
        let noisy = asm.depolarized(0.3);
        assert!(noisy.validate().is_ok());
        let full = asm.depolarized(0.0);
        assert!((&full.members[0][0] - asm.total.scale(0.5)).norm() < 1e-12);
    }
}
