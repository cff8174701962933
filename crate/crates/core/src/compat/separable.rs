use serde::{Deserialize, Serialize};

use super::LhsModel;
use crate::error::{Error, Result};
use crate::linalg::{self, BipartiteShape, CMatrix};
use crate::objects::{MeasurementSet, Povm};

/// Separable state `Σ_i q_i α_i ⊗ β_i` kept as its ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableEnsemble {
    pub weights: Vec<f64>,
    #[serde(with = "crate::json::matrices")]
    pub alice: Vec<CMatrix>,
    #[serde(with = "crate::json::matrices")]
    pub bob: Vec<CMatrix>,
}

impl SeparableEnsemble {
    pub fn shape(&self) -> BipartiteShape {
        BipartiteShape::new(self.alice[0].nrows(), self.bob[0].nrows())
    }

    pub fn state(&self) -> CMatrix {
        let n = self.shape().total();
        self.weights
            .iter()
            .zip(self.alice.iter().zip(&self.bob))
            .fold(CMatrix::zeros(n, n), |acc, (q, (a, b))| acc + linalg::kron(a, b).scale(*q))
    }
}

/// Hidden states below this trace carry no weight and are dropped.
const EMPTY: f64 = 1e-14;

/// `α_λ = |λ⟩⟨λ|` on `C^k` (k = number of non-empty hidden states),
/// `β_λ = T_λ / tr T_λ`, `q_λ = tr T_λ` and `A_{a|x} = Σ_λ p(a|x,λ) |λ⟩⟨λ|`.
pub fn lhs_to_separable_preparation(m: &LhsModel) -> Result<(SeparableEnsemble, MeasurementSet)> {
    let kept: Vec<usize> = (0..m.hidden_states.len()).filter(|&l| m.hidden_states[l].trace().re > EMPTY).collect();
    if kept.is_empty() {
        return Err(Error::Validation("LHS model has no weighted hidden state".into()));
    }
    let k = kept.len();
    let weights: Vec<f64> = kept.iter().map(|&l| m.hidden_states[l].trace().re).collect();
    let alice = (0..k).map(|i| linalg::projector(&basis(k, i))).collect();
    let bob = kept.iter().zip(&weights).map(|(&l, q)| m.hidden_states[l].unscale(*q)).collect();
    let povms = m
        .outcome_counts()
        .iter()
        .enumerate()
        .map(|(x, &o)| Povm {
            effects: (0..o)
                .map(|a| {
                    CMatrix::from_diagonal(&linalg::CVector::from_iterator(k, kept.iter().map(|&l| linalg::c(m.response[l][x][a], 0.0))))
                })
                .collect(),
        })
        .collect();
    Ok((SeparableEnsemble { weights, alice, bob }, MeasurementSet::new(povms)?))
}

/// `T_i = q_i tr(α_i) β_i` with `p(a|x,i) = tr(A_{a|x} α_i) / tr(α_i)`.
pub fn separable_preparation_to_lhs(ens: &SeparableEnsemble, ms: &MeasurementSet) -> Result<LhsModel> {
    let n = ens.weights.len();
    if n == 0 || ens.alice.len() != n || ens.bob.len() != n {
        return Err(Error::Dimension("ensemble needs one α and one β per weight".into()));
    }
    if ms.dim() != ens.alice[0].nrows() {
        return Err(Error::Dimension(format!("measurements act on dimension {}, Alice's states on {}", ms.dim(), ens.alice[0].nrows())));
    }
    let mut hidden_states = Vec::with_capacity(n);
    let mut response = Vec::with_capacity(n);
    for ((q, alpha), beta) in ens.weights.iter().zip(&ens.alice).zip(&ens.bob) {
        let ta = alpha.trace().re;
        let tb = beta.trace().re;
        if ta <= EMPTY || tb <= EMPTY {
            continue;
        }
        hidden_states.push(beta.scale(q * ta));
        response.push(ms.povms.iter().map(|p| p.effects.iter().map(|e| linalg::trace_product(e, alpha) / ta).collect()).collect());
    }
    Ok(LhsModel { hidden_states, response })
}

fn basis(k: usize, i: usize) -> linalg::CVector {
    let mut v = linalg::CVector::zeros(k);
    v[i] = linalg::ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objects::{assemblage_from, Validate};
    use crate::random;

    fn random_model(seed: u64, hidden: usize, d: usize) -> LhsModel {
        let mut rng = random::rng(seed);
        let q = random::probabilities(hidden, &mut rng);
        let hidden_states = (0..hidden).map(|l| random::density(d, d, &mut rng).scale(q[l])).collect();
        let response = (0..hidden).map(|_| vec![random::probabilities(2, &mut rng), random::probabilities(3, &mut rng)]).collect();
        LhsModel { hidden_states, response }
    }

    #[test]
    fn converters_close_at_assemblage_level() {
        for seed in 0..5 {
            let m = random_model(seed, 3, 2);
            assert!(m.validate().is_ok());
            let target = m.reconstruct().unwrap();
            let (ens, ms) = lhs_to_separable_preparation(&m).unwrap();
            assert_eq!(ens.shape().dim_a, 3);
            let asm = assemblage_from(&ens.state(), ens.shape(), &ms).unwrap();
            assert!(asm.max_distance(&target).unwrap() < 1e-12);
            let back = separable_preparation_to_lhs(&ens, &ms).unwrap();
            assert!(back.reconstruct().unwrap().max_distance(&target).unwrap() < 1e-12);
        }
    }

    #[test]
    fn single_hidden_state_is_a_product_preparation() {
        let mut m = random_model(9, 1, 3);
        m.hidden_states[0] = m.hidden_states[0].unscale(m.hidden_states[0].trace().re);
        let (ens, ms) = lhs_to_separable_preparation(&m).unwrap();
        assert_eq!(ens.weights, vec![1.0]);
        assert_eq!(ms.dim(), 1);
    }

    #[test]
    fn deterministic_response_gives_projective_measurements() {
        let mut m = random_model(4, 2, 2);
        m.response = vec![vec![vec![1.0, 0.0], vec![0.0, 0.0, 1.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0, 0.0]]];
        let (_, ms) = lhs_to_separable_preparation(&m).unwrap();
        for p in &ms.povms {
            for e in &p.effects {
                assert!(linalg::max_abs_diff(&(e * e), e) < 1e-15);
            }
        }
    }

    #[test]
    fn uniform_ensemble_gives_one_hidden_state_per_member() {
        let d = 3;
        let ens = SeparableEnsemble {
            weights: vec![1.0 / d as f64; d],
            alice: (0..d).map(|i| linalg::projector(&basis(d, i))).collect(),
            bob: (0..d).map(|i| linalg::projector(&basis(d, (i + 1) % d))).collect(),
        };
        let mut rng = random::rng(1);
        let ms = MeasurementSet::from_effects(vec![random::povm(d, 2, &mut rng)]).unwrap();
        let m = separable_preparation_to_lhs(&ens, &ms).unwrap();
        assert_eq!(m.hidden_states.len(), d);
        let asm = assemblage_from(&ens.state(), ens.shape(), &ms).unwrap();
        assert!(m.reconstruct().unwrap().max_distance(&asm).unwrap() < 1e-12);
    }
}
