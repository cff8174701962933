use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, BipartiteShape, CMatrix, Side};
use crate::objects::{DensityState, KrausChannel, PureDecomposition};

/// Weighted Kraus operators `{q_i, K_i}` with `Σ_i q_i K_i* K_i = I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausExtraction {
    pub weights: Vec<f64>,
    #[serde(with = "crate::json::matrices")]
    pub kraus_ops: Vec<CMatrix>,
}

impl KrausExtraction {
    /// The same channel with the weights folded in: `√q_i K_i`.
    pub fn channel(&self) -> KrausChannel {
        KrausChannel { kraus_ops: self.weights.iter().zip(&self.kraus_ops).map(|(q, k)| k.scale(q.sqrt())).collect() }
    }

    /// `A ↦ Σ_i q_i K_i* A K_i`.
    pub fn heisenberg(&self, a: &CMatrix) -> CMatrix {
        let d = self.kraus_ops[0].ncols();
        self.weights.iter().zip(&self.kraus_ops).fold(CMatrix::zeros(d, d), |acc, (q, k)| acc + (k.adjoint() * a * k).scale(*q))
    }

    pub fn max_rank(&self) -> usize {
        self.kraus_ops.iter().map(|k| linalg::rank(k, linalg::RANK_TOL)).max().unwrap_or(0)
    }
}

/// Kraus operators `K_i = F_{φ_i} σ^{-1/2}` from a pure decomposition
/// `ω = Σ_i q_i |φ_i⟩⟨φ_i|` on `K ⊗ H` whose `H`-marginal is `σ^T`. Each
/// `K_i` has the Schmidt rank of `φ_i`.
pub fn peb_kraus_extraction(dec: &PureDecomposition, sigma: &DensityState) -> Result<KrausExtraction> {
    dec.validate().into_result()?;
    let shape = dec.shape;
    if sigma.dim() != shape.dim_b {
        return Err(Error::Dimension(format!("sigma has dimension {}, decomposition input factor {}", sigma.dim(), shape.dim_b)));
    }
    let marginal = linalg::partial_trace(&dec.reconstruct(), shape, Side::A)?;
    let mismatch = linalg::max_abs_diff(&marginal, &sigma.matrix.transpose());
    if mismatch > 1e-7 {
        return Err(Error::Validation(format!("input marginal differs from sigma^T by {mismatch:.3e}")));
    }
    let inv = linalg::inv_sqrt(&sigma.matrix, linalg::RANK_TOL)?;
    let mut weights = Vec::with_capacity(dec.weights.len());
    let mut kraus_ops = Vec::with_capacity(dec.weights.len());
    for (q, phi) in dec.weights.iter().zip(&dec.vectors) {
        if *q <= 0.0 {
            continue;
        }
        weights.push(*q);
        kraus_ops.push(linalg::vec_to_op(phi, shape)? * &inv);
    }
    Ok(KrausExtraction { weights, kraus_ops })
}

/// Pure decomposition of the normalized Choi state of `c` into the
/// members `(K_i ⊗ I)|Φ⟩`, normalized, with weights `tr(K_i* K_i) / d_in`.
/// Member `i` has the Schmidt rank of `K_i`, so the decomposition
/// certifies a Schmidt number at most the largest Kraus rank.
pub fn kraus_to_choi_sn_witness(c: &KrausChannel) -> Result<PureDecomposition> {
    let (d_out, d_in) = (c.d_out(), c.d_in());
    let mut weights = Vec::new();
    let mut vectors = Vec::new();
    for k in &c.kraus_ops {
        let q = (k.adjoint() * k).trace().re / d_in as f64;
        if q <= 0.0 {
            continue;
        }
        let v = linalg::op_to_vec(k);
        vectors.push(v.unscale(v.norm()));
        weights.push(q);
    }
    if weights.is_empty() {
        return Err(Error::Validation("channel has no non-zero Kraus operator".into()));
    }
    Ok(PureDecomposition { weights, vectors, shape: BipartiteShape::new(d_out, d_in) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objects::{choi_of_channel, heisenberg_apply, sn_upper_from_decomposition};
    use crate::random;

    /// `Λ*(A) = (tr_K[(A ⊗ I) J_un])^T` with
    /// `J_un = (I ⊗ σ^{-T/2}) ω (I ⊗ σ^{-T/2})`, computed from the mixed
    /// state alone.
    fn heisenberg_oracle(omega: &CMatrix, shape: BipartiteShape, sigma: &CMatrix, a: &CMatrix) -> CMatrix {
        let s = linalg::inv_sqrt(&sigma.transpose(), 1e-12).unwrap();
        let w = linalg::kron(&linalg::identity(shape.dim_a), &s);
        let j = &w * omega * &w;
        let reduced = linalg::partial_trace(&(linalg::kron(a, &linalg::identity(shape.dim_b)) * j), shape, Side::A).unwrap();
        reduced.transpose()
    }

    #[test]
    fn witness_reconstructs_the_choi_state() {
        let mut rng = random::rng(1);
        let c = KrausChannel::new(random::kraus_ops(4, 4, 3, 2, &mut rng)).unwrap();
        let dec = kraus_to_choi_sn_witness(&c).unwrap();
        let j = choi_of_channel(&c);
        assert!(linalg::max_abs_diff(&dec.reconstruct(), &j.matrix) < 1e-14);
        assert!(sn_upper_from_decomposition(&j.matrix, &dec).unwrap() <= 2);
    }

    #[test]
    fn rank_one_kraus_gives_entanglement_breaking_certificate() {
        let mut rng = random::rng(5);
        let c = KrausChannel::new(random::kraus_ops(3, 2, 4, 1, &mut rng)).unwrap();
        let dec = kraus_to_choi_sn_witness(&c).unwrap();
        assert_eq!(sn_upper_from_decomposition(&choi_of_channel(&c).matrix, &dec).unwrap(), 1);
    }

    #[test]
    fn identity_channel_needs_full_schmidt_rank() {
        let c = KrausChannel::identity(3);
        let dec = kraus_to_choi_sn_witness(&c).unwrap();
        assert_eq!(sn_upper_from_decomposition(&choi_of_channel(&c).matrix, &dec).unwrap(), 3);
        let ext = peb_kraus_extraction(&dec, &DensityState::maximally_mixed(3)).unwrap();
        assert_eq!(ext.kraus_ops.len(), 1);
        let k = &ext.kraus_ops[0];
        assert!(linalg::max_abs_diff(&(k.adjoint() * k), &linalg::identity(3)) < 1e-12);
    }

    #[test]
    fn extraction_composes_with_the_witness() {
        let mut rng = random::rng(9);
        let c = KrausChannel::new(random::kraus_ops(4, 4, 3, 2, &mut rng)).unwrap();
        let dec = kraus_to_choi_sn_witness(&c).unwrap();
        let ext = peb_kraus_extraction(&dec, &DensityState::maximally_mixed(4)).unwrap();
        assert!(ext.max_rank() <= 2);
        let a = random::density(4, 4, &mut rng);
        let want = heisenberg_apply(&c, &a).unwrap();
        assert!(linalg::max_abs_diff(&ext.heisenberg(&a), &want) < 1e-12);
    }

    #[test]
    fn extraction_with_general_sigma_matches_the_oracle() {
        let mut rng = random::rng(21);
        let (dk, dh) = (3, 3);
        // Product-vector decomposition of a state with a full-rank
        // H-marginal: an entanglement-breaking channel.
        let shape = BipartiteShape::new(dk, dh);
        let weights = random::probabilities(6, &mut rng);
        let vectors: Vec<_> =
            (0..6).map(|_| linalg::kron_vec(&random::pure_state(dk, &mut rng), &random::pure_state(dh, &mut rng))).collect();
        let dec = PureDecomposition { weights, vectors, shape };
        let omega = dec.reconstruct();
        let sigma_t = linalg::partial_trace(&omega, shape, Side::A).unwrap();
        let sigma = DensityState::new(sigma_t.transpose()).unwrap();
        let ext = peb_kraus_extraction(&dec, &sigma).unwrap();
        assert_eq!(ext.max_rank(), 1);
        let completeness = ext.heisenberg(&linalg::identity(dk));
        assert!(linalg::max_abs_diff(&completeness, &linalg::identity(dh)) < 1e-10);
        let a = random::density(dk, 2, &mut rng);
        let want = heisenberg_oracle(&omega, shape, &sigma.matrix, &a);
        assert!(linalg::max_abs_diff(&ext.heisenberg(&a), &want) < 1e-10);
    }

    #[test]
    fn measure_and_prepare_qubit_channel() {
        // Λ(ρ) = Σ_b ⟨b|ρ|b⟩ τ_b with Z-basis readout.
        let mut rng = random::rng(2);
        let taus = [random::pure_state(2, &mut rng), random::pure_state(2, &mut rng)];
        let kraus: Vec<CMatrix> = (0..2)
            .map(|b| {
                let mut e = linalg::CVector::zeros(2);
                e[b] = linalg::ONE;
                &taus[b] * e.adjoint()
            })
            .collect();
        let c = KrausChannel::new(kraus).unwrap();
        let dec = kraus_to_choi_sn_witness(&c).unwrap();
        let ext = peb_kraus_extraction(&dec, &DensityState::maximally_mixed(2)).unwrap();
        assert_eq!(ext.max_rank(), 1);
        let a = random::density(2, 2, &mut rng);
        assert!(linalg::max_abs_diff(&ext.heisenberg(&a), &heisenberg_apply(&c, &a).unwrap()) < 1e-12);
    }

    #[test]
    fn marginal_mismatch_is_rejected() {
        let c = KrausChannel::identity(2);
        let dec = kraus_to_choi_sn_witness(&c).unwrap();
        let sigma = DensityState::thermal(2, 1.0);
        assert!(matches!(peb_kraus_extraction(&dec, &sigma), Err(Error::Validation(_))));
    }
}
