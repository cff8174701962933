//! Schmidt rank of pure states and certified bounds on the Schmidt number
//! of mixed states.
//!
//! The Schmidt number is the smallest achievable maximum Schmidt rank over
//! all pure-state decompositions. At finite dimension finite decompositions
//! suffice, so any explicit decomposition gives an upper bound. Computing
//! the exact value is hard in general and is not attempted.

use serde::{Deserialize, Serialize};

use super::ValidationReport;
use crate::error::{Error, Result};
use crate::linalg::{self, BipartiteShape, CMatrix, CVector, C64};

/// Number of Schmidt coefficients above `rank_tol · c_max`.
pub fn schmidt_rank(phi: &CVector, shape: BipartiteShape, rank_tol: f64) -> Result<usize> {
    Ok(linalg::schmidt_decompose(phi, shape)?.rank(rank_tol))
}

/// `ρ = Σ_i q_i |φ_i⟩⟨φ_i|` on `A ⊗ B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureDecomposition {
    pub weights: Vec<f64>,
    #[serde(with = "crate::json::vectors")]
    pub vectors: Vec<CVector>,
    pub shape: BipartiteShape,
}

impl PureDecomposition {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.shape.total();
        self.weights.iter().zip(&self.vectors).fold(CMatrix::zeros(n, n), |acc, (q, v)| acc + linalg::projector(v).scale(*q))
    }

    pub fn max_schmidt_rank(&self, rank_tol: f64) -> Result<usize> {
        let mut worst = 0;
        for v in &self.vectors {
            worst = worst.max(schmidt_rank(v, self.shape, rank_tol)?);
        }
        Ok(worst)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new("pure_decomposition");
        if self.weights.len() != self.vectors.len() || self.weights.is_empty() {
            r.fail("one vector per weight", "");
            return r;
        }
        for (i, (q, v)) in self.weights.iter().zip(&self.vectors).enumerate() {
            r.check("non-negative weight", format!("weights[{i}]"), (-q).max(0.0), 1e-12);
            if v.len() != self.shape.total() {
                r.fail("vector length matches shape", format!("vectors[{i}]"));
            }
        }
        r
    }
}

/// Upper bound on the Schmidt number: the largest Schmidt rank among the
/// members of a decomposition that reproduces `rho` within `1e-8`.
pub fn sn_upper_from_decomposition(rho: &CMatrix, decomposition: &PureDecomposition) -> Result<usize> {
    decomposition.validate().into_result()?;
    if rho.nrows() != decomposition.shape.total() {
        return Err(Error::Dimension("state does not match decomposition shape".into()));
    }
    let err = linalg::max_abs_diff(&decomposition.reconstruct(), rho);
    if err > 1e-8 {
        return Err(Error::Validation(format!("decomposition does not reconstruct the state (error {err:.3e})")));
    }
    decomposition.max_schmidt_rank(linalg::RANK_TOL)
}

/// Lower bound on the Schmidt number of a state on `d ⊗ d` from its
/// maximal overlap `F` with a maximally entangled state. A state with
/// Schmidt number `k` has `F ≤ k/d`, so `ceil(d F)` is a valid bound.
///
/// The overlap with `(U ⊗ I)|Φ⟩` is `(1/d) Σ_i p_i |tr(U* F_i)|²` for the
/// eigendecomposition `ρ = Σ p_i |f_i⟩⟨f_i|`, `F_i = vec_to_op(f_i)`. It is
/// maximized by the monotone fixed-point iteration
/// `U ← polar(Σ_i p_i conj(c_i) F_i)`, from several starting points. The
/// result is only ever a lower bound.
pub fn sn_lower_entangled_fraction(rho: &CMatrix, d: usize) -> Result<usize> {
    if rho.nrows() != d * d || rho.ncols() != d * d {
        return Err(Error::Dimension(format!("expected a {0}x{0} operator on {d}⊗{d}, got {1}x{2}", d * d, rho.nrows(), rho.ncols())));
    }
    let f = max_entangled_fraction(rho, d)?;
    let k = (d as f64 * f - 1e-9).ceil();
    Ok((k.max(1.0) as usize).min(d))
}

/// `max_U ⟨Φ_U|ρ|Φ_U⟩` over maximally entangled `Φ_U = (U ⊗ I)|Φ⟩`.
pub fn max_entangled_fraction(rho: &CMatrix, d: usize) -> Result<f64> {
    let e = linalg::hermitian_eig(rho)?;
    let shape = BipartiteShape::new(d, d);
    let mut terms: Vec<(f64, CMatrix)> = Vec::new();
    for (k, &p) in e.values.iter().enumerate() {
        if p <= 1e-14 {
            continue;
        }
        let v: CVector = e.vectors.column(k).into_owned();
        terms.push((p, linalg::vec_to_op(&v, shape)?));
    }
    if terms.is_empty() {
        return Ok(0.0);
    }
    let value = |u: &CMatrix| -> f64 { terms.iter().map(|(p, f)| p * (u.adjoint() * f).trace().norm_sqr()).sum::<f64>() / d as f64 };
    let polar = |g: &CMatrix| -> CMatrix {
        let s = linalg::svd(g);
        &s.u * s.v.adjoint()
    };
    let mut starts = vec![linalg::identity(d)];
    for (_, f) in terms.iter().take(3) {
        starts.push(polar(f));
    }
    let mut best = 0.0f64;
    for mut u in starts {
        let mut current = value(&u);
        for _ in 0..500 {
            let g = terms.iter().fold(CMatrix::zeros(d, d), |acc, (p, f)| {
                let c: C64 = (u.adjoint() * f).trace();
                acc + f * (c.conj() * *p)
            });
            if g.norm() == 0.0 {
                break;
            }
            u = polar(&g);
            let next = value(&u);
            let done = next - current < 1e-13;
            current = current.max(next);
            if done {
                break;
            }
        }
        best = best.max(current);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron_vec;
    use crate::random;

    fn max_entangled(d: usize) -> CVector {
        let mut v = CVector::zeros(d * d);
        for k in 0..d {
            v[k * d + k] = C64::from(1.0 / (d as f64).sqrt());
        }
        v
    }

    #[test]
    fn schmidt_rank_examples() {
        let mut r = random::rng(21);
        let a = random::pure_state(2, &mut r);
        let b = random::pure_state(3, &mut r);
        assert_eq!(schmidt_rank(&kron_vec(&a, &b), BipartiteShape::new(2, 3), 1e-8).unwrap(), 1);
        assert_eq!(schmidt_rank(&max_entangled(2), BipartiteShape::new(2, 2), 1e-8).unwrap(), 2);

        let ua = random::haar_unitary(4, &mut r);
        let ub = random::haar_unitary(4, &mut r);
        let mut phi = CVector::zeros(16);
        for (k, w) in [0.7, 0.5, 0.2].iter().enumerate() {
            let u: CVector = ua.column(k).into_owned();
            let v: CVector = ub.column(k).into_owned();
            phi += kron_vec(&u, &v) * C64::from(*w);
        }
        assert_eq!(schmidt_rank(&phi, BipartiteShape::new(4, 4), 1e-8).unwrap(), 3);
    }

    #[test]
    fn upper_bound_from_decompositions() {
        let mut r = random::rng(22);
        let shape = BipartiteShape::new(2, 2);
        let vectors: Vec<CVector> = (0..3).map(|_| kron_vec(&random::pure_state(2, &mut r), &random::pure_state(2, &mut r))).collect();
        let dec = PureDecomposition { weights: vec![0.5, 0.3, 0.2], vectors, shape };
        assert_eq!(sn_upper_from_decomposition(&dec.reconstruct(), &dec).unwrap(), 1);

        let bell = max_entangled(2);
        let rho = linalg::projector(&bell);
        let dec = PureDecomposition { weights: vec![1.0], vectors: vec![bell], shape };
        assert_eq!(sn_upper_from_decomposition(&rho, &dec).unwrap(), 2);
        assert!(sn_upper_from_decomposition(&linalg::identity(4).scale(0.25), &dec).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        let rho = linalg::projector(&max_entangled(3));
        assert_eq!(sn_lower_entangled_fraction(&rho, 3).unwrap(), 3);

        let mut r = random::rng(23);
        let prod = kron_vec(&random::pure_state(3, &mut r), &random::pure_state(3, &mut r));
        assert_eq!(sn_lower_entangled_fraction(&linalg::projector(&prod), 3).unwrap(), 1);

        // 0.9 Bell + 0.1 I/4: overlap with the Bell state itself is
        // 0.9 + 0.1/4 = 0.925, so d·F = 1.85 and the bound is 2.
        let bell = max_entangled(2);
        let rho = linalg::projector(&bell).scale(0.9) + linalg::identity(4).scale(0.1 / 4.0);
        let direct = linalg::trace_product(&rho, &linalg::projector(&bell));
        assert!((direct - 0.925).abs() < 1e-12);
        assert!((max_entangled_fraction(&rho, 2).unwrap() - 0.925).abs() < 1e-9);
        assert_eq!(sn_lower_entangled_fraction(&rho, 2).unwrap(), 2);
    }

    #[test]
    fn fraction_finds_rotated_maximally_entangled_state() {
        let mut r = random::rng(24);
        let u = random::haar_unitary(3, &mut r);
        let phi = linalg::op_to_vec(&(&u * linalg::vec_to_op(&max_entangled(3), BipartiteShape::new(3, 3)).unwrap()));
        let f = max_entangled_fraction(&linalg::projector(&phi), 3).unwrap();
        assert!((f - 1.0).abs() < 1e-9, "{f}");
    }
}
