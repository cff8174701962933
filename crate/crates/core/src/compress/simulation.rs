use crate::compat::ParentModel;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::objects::{MeasurementSet, PointwiseKrausModel, Povm, Validate};

/// `M_{a|x} = Σ_λ μ(λ) K_λ* N_{a|x,λ} K_λ`.
pub fn eval_simulation(m: &PointwiseKrausModel) -> Result<MeasurementSet> {
    m.validate().into_result()?;
    let d = m.input_dim();
    let counts = m.local_measurements[0].outcome_counts();
    let mut effects: Vec<Vec<CMatrix>> = counts.iter().map(|&o| vec![CMatrix::zeros(d, d); o]).collect();
    for ((w, k), ms) in m.weights.iter().zip(&m.kraus_ops).zip(&m.local_measurements) {
        if *w == 0.0 {
            continue;
        }
        let kd = k.adjoint();
        for (x, p) in ms.povms.iter().enumerate() {
            for (a, n) in p.effects.iter().enumerate() {
                effects[x][a] += (&kd * n * k).scale(*w);
            }
        }
    }
    let povms = effects.into_iter().map(|row| Povm { effects: row.iter().map(linalg::hermitian_part).collect() }).collect();
    MeasurementSet::new(povms)
}

/// Rank-one simulation of a jointly measurable set. Each parent effect is
/// refined into rank-one pieces `G_λ = Σ_k g_k |u_k⟩⟨u_k|`; piece `k`
/// becomes a branch with weight `g_k / d`, Kraus operator `√d ⟨u_k|` into
/// a one-dimensional memory and the classical readout `p(a|x,λ)`.
pub fn one_sim_from_jm(pm: &ParentModel) -> Result<PointwiseKrausModel> {
    pm.validate().into_result()?;
    let d = pm.dim();
    let sd = (d as f64).sqrt();
    let mut weights = Vec::new();
    let mut kraus_ops = Vec::new();
    let mut local_measurements = Vec::new();
    for (g, kernel) in pm.parent.iter().zip(&pm.response) {
        let e = linalg::hermitian_eig(g)?;
        let floor = 1e-15 * e.max().max(1.0);
        let readout = MeasurementSet {
            povms: kernel
                .iter()
                .map(|row| Povm { effects: row.iter().map(|&p| CMatrix::from_element(1, 1, C64::from(p))).collect() })
                .collect(),
        };
        for (k, &gk) in e.values.iter().enumerate() {
            if gk <= floor {
                continue;
            }
            let u = e.vectors.column(k);
            weights.push(gk / d as f64);
            kraus_ops.push(CMatrix::from_fn(1, d, |_, j| u[j].conj() * sd));
            local_measurements.push(readout.clone());
        }
    }
    // Pieces below round-off were dropped; restore Σ μ = 1 exactly.
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let model = PointwiseKrausModel { weights, kraus_ops, rank_bound: 1, local_measurements, transpose_bases: None };
    model.validate().into_result()?;
    Ok(model)
}

/// Parent POVM `G_λ = μ(λ) K_λ* |φ_λ⟩⟨φ_λ| K_λ` and response
/// `p(a|x,λ) = ⟨φ_λ|N_{a|x,λ}|φ_λ⟩`, where `φ_λ` spans the range of the
/// rank-one `K_λ`. Branches with zero weight or zero Kraus operator are
/// dropped.
pub fn jm_from_one_sim(m: &PointwiseKrausModel) -> Result<ParentModel> {
    m.validate().into_result()?;
    if m.rank_bound != 1 {
        return Err(Error::Validation(format!("expected a rank-one model, rank bound is {}", m.rank_bound)));
    }
    let mut parent = Vec::new();
    let mut response = Vec::new();
    for ((w, k), ms) in m.weights.iter().zip(&m.kraus_ops).zip(&m.local_measurements) {
        let s = linalg::svd(k);
        let top = s.s.first().copied().unwrap_or(0.0);
        if *w <= 0.0 || top <= 0.0 {
            continue;
        }
        let phi = s.u.column(0).into_owned();
        let v = s.v.column(0).into_owned();
        parent.push(linalg::projector(&v).scale(w * top * top));
        response.push(ms.povms.iter().map(|p| p.effects.iter().map(|n| phi.dotc(&(n * &phi)).re).collect()).collect());
    }
    let pm = ParentModel { parent, response };
    pm.validate().into_result()?;
    Ok(pm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::{jm_test, JmOutcome};
    use crate::random;

    pub(crate) fn random_parent(d: usize, seed: u64) -> ParentModel {
        let mut rng = random::rng(seed);
        let parent = random::povm(d, 3, &mut rng);
        let response = (0..3).map(|_| vec![random::probabilities(2, &mut rng), random::probabilities(3, &mut rng)]).collect();
        ParentModel { parent, response }
    }

    #[test]
    fn identity_branch_returns_the_measurements() {
        let mut rng = random::rng(2);
        let ms = MeasurementSet::from_effects(vec![random::povm(3, 2, &mut rng), random::povm(3, 4, &mut rng)]).unwrap();
        let m = PointwiseKrausModel {
            weights: vec![1.0],
            kraus_ops: vec![linalg::identity(3)],
            rank_bound: 3,
            local_measurements: vec![ms.clone()],
            transpose_bases: None,
        };
        assert!(eval_simulation(&m).unwrap().max_distance(&ms).unwrap() < 1e-15);
    }

    #[test]
    fn coin_split_is_a_convex_mixture() {
        let mut rng = random::rng(8);
        let a = MeasurementSet::from_effects(vec![random::povm(2, 2, &mut rng)]).unwrap();
        let b = MeasurementSet::from_effects(vec![random::povm(2, 2, &mut rng)]).unwrap();
        let m = PointwiseKrausModel {
            weights: vec![0.3, 0.7],
            kraus_ops: vec![linalg::identity(2), linalg::identity(2)],
            rank_bound: 2,
            local_measurements: vec![a.clone(), b.clone()],
            transpose_bases: None,
        };
        let out = eval_simulation(&m).unwrap();
        for k in 0..2 {
            let want = a.effect(0, k).scale(0.3) + b.effect(0, k).scale(0.7);
            assert!(linalg::max_abs_diff(out.effect(0, k), &want) < 1e-15);
        }
    }

    #[test]
    fn round_trip_through_rank_one_models() {
        for seed in 0..10 {
            let pm = random_parent(2 + (seed as usize % 2), seed);
            let source = pm.reconstruct().unwrap();
            let sim = one_sim_from_jm(&pm).unwrap();
            assert!(sim.kraus_ops.iter().all(|k| linalg::rank(k, linalg::RANK_TOL) == 1));
            assert!(eval_simulation(&sim).unwrap().max_distance(&source).unwrap() < 1e-12);
            let back = jm_from_one_sim(&sim).unwrap();
            assert!(back.reconstruct().unwrap().max_distance(&source).unwrap() < 1e-12);
        }
    }

    #[test]
    fn projective_parent_gives_one_branch_per_projector() {
        let z = Povm::from_observable(&CMatrix::from_diagonal(&linalg::CVector::from_vec(vec![C64::from(1.0), C64::from(-1.0)]))).unwrap();
        let ms = MeasurementSet::new(vec![z.clone(), z]).unwrap();
        let JmOutcome::Compatible { model, .. } = jm_test(&ms).unwrap() else { panic!() };
        let sim = one_sim_from_jm(&model).unwrap();
        assert_eq!(sim.weights.iter().filter(|&&w| w > 1e-6).count(), 2);
        assert!(eval_simulation(&sim).unwrap().max_distance(&ms).unwrap() < 1e-7);
    }

    #[test]
    fn zero_weight_branch_is_dropped() {
        let pm = random_parent(2, 4);
        let mut sim = one_sim_from_jm(&pm).unwrap();
        sim.weights.push(0.0);
        sim.kraus_ops.push(sim.kraus_ops[0].clone());
        sim.local_measurements.push(sim.local_measurements[0].clone());
        let back = jm_from_one_sim(&sim).unwrap();
        assert_eq!(back.parent.len(), sim.branches() - 1);
    }
}
