use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, BipartiteShape, CMatrix, CVector, Side};
use crate::objects::{
    assemblage_from, schmidt_rank, Assemblage, DensityState, MeasurementSet, PointwiseKrausModel, Povm, Validate, ValidationReport,
    TAU_NORM,
};

/// Branch `λ` prepares the pure state `ψ_λ` on `A_λ ⊗ B` with weight `p_λ`
/// and Alice measures `N_{a|x,λ}` on `A_λ`. Alice's dimension may differ
/// between branches; Bob's may not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparationModel {
    pub weights: Vec<f64>,
    #[serde(with = "crate::json::vectors")]
    pub states: Vec<CVector>,
    pub shapes: Vec<BipartiteShape>,
    pub measurements: Vec<MeasurementSet>,
    pub rank_bound: usize,
}

impl PreparationModel {
    /// Splits mixed branch states into their eigenvectors, absorbing the
    /// eigenvalues into the weights.
    pub fn from_mixed(
        weights: &[f64],
        states: &[CMatrix],
        shapes: &[BipartiteShape],
        measurements: &[MeasurementSet],
        rank_bound: usize,
    ) -> Result<Self> {
        if states.len() != weights.len() || shapes.len() != weights.len() || measurements.len() != weights.len() {
            return Err(Error::Dimension("one state, shape and measurement set per weight".into()));
        }
        let mut out = Self { weights: vec![], states: vec![], shapes: vec![], measurements: vec![], rank_bound };
        for (((w, rho), shape), ms) in weights.iter().zip(states).zip(shapes).zip(measurements) {
            let e = linalg::hermitian_eig(rho)?;
            let tr: f64 = e.values.iter().filter(|&&v| v > 0.0).sum();
            for (k, &v) in e.values.iter().enumerate() {
                if v <= 1e-14 * tr {
                    continue;
                }
                out.weights.push(w * v / tr);
                out.states.push(e.vectors.column(k).into_owned());
                out.shapes.push(*shape);
                out.measurements.push(ms.clone());
            }
        }
        out.validate().into_result()?;
        Ok(out)
    }

    pub fn branches(&self) -> usize {
        self.weights.len()
    }

    pub fn dim_b(&self) -> usize {
        self.shapes.first().map_or(0, |s| s.dim_b)
    }

    /// Bob's total state `Σ_λ p_λ tr_A |ψ_λ⟩⟨ψ_λ|`.
    pub fn total(&self) -> Result<CMatrix> {
        let d = self.dim_b();
        let mut out = CMatrix::zeros(d, d);
        for ((w, psi), shape) in self.weights.iter().zip(&self.states).zip(&self.shapes) {
            out += linalg::partial_trace(&linalg::projector(psi), *shape, Side::A)?.scale(*w);
        }
        Ok(linalg::hermitian_part(&out))
    }

    pub fn assemblage(&self) -> Result<Assemblage> {
        self.validate().into_result()?;
        let d = self.dim_b();
        let counts = self.measurements[0].outcome_counts();
        let mut members: Vec<Vec<CMatrix>> = counts.iter().map(|&o| vec![CMatrix::zeros(d, d); o]).collect();
        let mut total = CMatrix::zeros(d, d);
        for (((w, psi), shape), ms) in self.weights.iter().zip(&self.states).zip(&self.shapes).zip(&self.measurements) {
            let part = assemblage_from(&linalg::projector(psi), *shape, ms)?;
            total += part.total.scale(*w);
            for (row, prow) in members.iter_mut().zip(&part.members) {
                for (m, p) in row.iter_mut().zip(prow) {
                    *m += p.scale(*w);
                }
            }
        }
        let members = members.into_iter().map(|row| row.iter().map(linalg::hermitian_part).collect()).collect();
        Assemblage::new(members, linalg::hermitian_part(&total))
    }
}

impl Validate for PreparationModel {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new("preparation_model");
        let n = self.weights.len();
        if n == 0 || self.states.len() != n || self.shapes.len() != n || self.measurements.len() != n {
            r.fail("one state, shape and measurement set per weight", "");
            return r;
        }
        for (l, &w) in self.weights.iter().enumerate() {
            r.check("non-negative weight", format!("weights[{l}]"), (-w).max(0.0), 1e-12);
        }
        let total: f64 = self.weights.iter().sum();
        r.check("weights sum to one", "weights", (total - 1.0).abs(), TAU_NORM);
        let db = self.dim_b();
        let layout = self.measurements[0].outcome_counts();
        for (l, ((psi, shape), ms)) in self.states.iter().zip(&self.shapes).zip(&self.measurements).enumerate() {
            if shape.dim_b != db || psi.len() != shape.total() {
                r.fail("state matches its shape and the common B dimension", format!("states[{l}]"));
                continue;
            }
            r.check("unit norm", format!("states[{l}]"), (psi.norm() - 1.0).abs(), TAU_NORM);
            match schmidt_rank(psi, *shape, linalg::RANK_TOL) {
                Ok(k) => r.check("Schmidt rank bound", format!("states[{l}]"), k as f64, self.rank_bound as f64),
                Err(_) => r.fail("Schmidt decomposition exists", format!("states[{l}]")),
            }
            if ms.dim() != shape.dim_a {
                r.fail("measurement acts on the A factor", format!("measurements[{l}]"));
                continue;
            }
            if ms.outcome_counts() != layout {
                r.fail("common setting/outcome layout", format!("measurements[{l}]"));
                continue;
            }
            r.merge(&format!("measurements[{l}]"), ms.validate());
        }
        r
    }
}

/// Preparation model to pointwise Kraus model for the total `sigma`.
///
/// With the Schmidt form `ψ_λ = Σ_i √p_i φ_i ⊗ ψ_i`, the branch compresses
/// with `K_λ = F_λ σ^{-1/2}`, `F_λ = Σ_i √p_i |i⟩⟨ψ_i|`, onto the Schmidt
/// support, and measures `N'_{a|x} = (V* N_{a|x} V)^T` with `V = [φ_i]`.
/// The sandwich of the simulated measurements by `σ^{1/2}` is the
/// assemblage of the preparation. `V` is kept in `transpose_bases`.
pub fn prep_to_sim(pm: &PreparationModel, sigma: &DensityState) -> Result<PointwiseKrausModel> {
    pm.validate().into_result()?;
    let total = pm.total()?;
    let mismatch = linalg::max_abs_diff(&total, &sigma.matrix);
    if mismatch > 1e-8 {
        return Err(Error::Validation(format!("preparation total differs from sigma by {mismatch:.3e}")));
    }
    // The model's own total keeps Σ μ K*K = I exact.
    let inv = linalg::inv_sqrt(&total, linalg::RANK_TOL)?;
    let d = pm.dim_b();
    let mut kraus_ops = Vec::with_capacity(pm.branches());
    let mut local_measurements = Vec::with_capacity(pm.branches());
    let mut bases = Vec::with_capacity(pm.branches());
    for ((psi, shape), ms) in pm.states.iter().zip(&pm.shapes).zip(&pm.measurements) {
        let sd = linalg::schmidt_decompose(psi, *shape)?;
        let top = sd.coefficients[0];
        let r = sd.coefficients.iter().filter(|&&c| c > 1e-14 * top).count();
        let f = CMatrix::from_fn(r, d, |i, k| sd.right[(k, i)].conj() * sd.coefficients[i]);
        let v = sd.left.columns(0, r).into_owned();
        let vd = v.adjoint();
        let povms = ms
            .povms
            .iter()
            .map(|p| Povm { effects: p.effects.iter().map(|n| linalg::hermitian_part(&(&vd * n * &v).transpose())).collect() })
            .collect();
        kraus_ops.push(f * &inv);
        local_measurements.push(MeasurementSet { povms });
        bases.push(v);
    }
    let model = PointwiseKrausModel {
        weights: pm.weights.clone(),
        kraus_ops,
        rank_bound: pm.rank_bound,
        local_measurements,
        transpose_bases: Some(bases),
    };
    model.validate().into_result()?;
    Ok(model)
}

/// Pointwise Kraus model to preparation model for the total `sigma`.
///
/// With `F_λ = K_λ σ^{1/2} = Σ_i s_i |u_i⟩⟨v_i|`, the branch prepares
/// `η_λ = Σ_i s_i u_i ⊗ v_i` (normalized, weight `μ(λ) ‖η_λ‖²`) and Alice
/// measures `N_{a|x,λ}` transposed in a basis completing `{u_i}`.
/// Branches with `η_λ = 0` carry no weight and are dropped.
pub fn sim_to_prep(m: &PointwiseKrausModel, sigma: &DensityState) -> Result<PreparationModel> {
    m.validate().into_result()?;
    let d = m.input_dim();
    if sigma.dim() != d {
        return Err(Error::Dimension(format!("sigma has dimension {}, model input {d}", sigma.dim())));
    }
    linalg::inv_sqrt(&sigma.matrix, linalg::RANK_TOL)?;
    let root = linalg::matrix_sqrt(&sigma.matrix)?;
    let mut out = PreparationModel { weights: vec![], states: vec![], shapes: vec![], measurements: vec![], rank_bound: m.rank_bound };
    for ((mu, k), ms) in m.weights.iter().zip(&m.kraus_ops).zip(&m.local_measurements) {
        let f = k * &root;
        let s = linalg::svd(&f);
        let top = s.s.first().copied().unwrap_or(0.0);
        let r = s.s.iter().filter(|&&x| x > 1e-14 * top && x > 0.0).count();
        let norm_sq: f64 = s.s[..r].iter().map(|x| x * x).sum();
        if *mu <= 0.0 || r == 0 || norm_sq <= 1e-30 {
            continue;
        }
        let n = k.nrows();
        let mut eta = CVector::zeros(n * d);
        for i in 0..r {
            let u: CVector = s.u.column(i).into_owned();
            let v: CVector = s.v.column(i).into_owned();
            eta += linalg::kron_vec(&u, &v) * linalg::c(s.s[i] / norm_sq.sqrt(), 0.0);
        }
        let basis = linalg::complete_basis(&s.u.columns(0, r).into_owned());
        let povms = ms
            .povms
            .iter()
            .map(|p| Povm { effects: p.effects.iter().map(|e| linalg::hermitian_part(&linalg::transpose_in_basis(e, &basis))).collect() })
            .collect();
        out.weights.push(mu * norm_sq);
        out.states.push(eta);
        out.shapes.push(BipartiteShape::new(n, d));
        out.measurements.push(MeasurementSet { povms });
    }
    out.validate().into_result()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::{eval_simulation, one_sim_from_jm};
    use crate::objects::sandwich;
    use crate::random;

    #[test]
    fn preparation_round_trip_closes_at_assemblage_level() {
        for seed in 0..6 {
            let mut rng = random::rng(seed);
            let n = 1 + seed as usize % 2;
            let d = 3 + (seed as usize / 2) % 2;
            let pm = random::preparation_model(d, n, 4, &[2, 3], &mut rng);
            let target = pm.assemblage().unwrap();
            let sigma = DensityState::new(target.total.clone()).unwrap();
            let sim = prep_to_sim(&pm, &sigma).unwrap();
            assert!(sim.kraus_ops.iter().all(|k| linalg::rank(k, linalg::RANK_TOL) <= n));
            let sandwiched = sandwich(&sigma, &eval_simulation(&sim).unwrap()).unwrap();
            assert!(sandwiched.max_distance(&target).unwrap() < 1e-10);
            let back = sim_to_prep(&sim, &sigma).unwrap();
            assert!(back.assemblage().unwrap().max_distance(&target).unwrap() < 1e-10);
        }
    }

    #[test]
    fn maximally_entangled_branch_gives_unitary_kraus() {
        let d = 3;
        let psi = linalg::purify(&linalg::identity(d).unscale(d as f64)).unwrap();
        let mut rng = random::rng(4);
        let ms = MeasurementSet::from_effects(vec![random::povm(d, 2, &mut rng)]).unwrap();
        let pm = PreparationModel {
            weights: vec![1.0],
            states: vec![psi],
            shapes: vec![BipartiteShape::new(d, d)],
            measurements: vec![ms],
            rank_bound: d,
        };
        let sim = prep_to_sim(&pm, &DensityState::maximally_mixed(d)).unwrap();
        let k = &sim.kraus_ops[0];
        assert!(linalg::max_abs_diff(&(k.adjoint() * k), &linalg::identity(d)) < 1e-12);
    }

    #[test]
    fn identity_branch_prepares_the_purification() {
        let mut rng = random::rng(6);
        let sigma = DensityState::new(random::full_rank_density(3, &mut rng)).unwrap();
        let ms = MeasurementSet::from_effects(vec![random::povm(3, 3, &mut rng)]).unwrap();
        let m = PointwiseKrausModel {
            weights: vec![1.0],
            kraus_ops: vec![linalg::identity(3)],
            rank_bound: 3,
            local_measurements: vec![ms],
            transpose_bases: None,
        };
        let prep = sim_to_prep(&m, &sigma).unwrap();
        let rho = linalg::projector(&prep.states[0]);
        let want = linalg::projector(&linalg::purify(&sigma.matrix).unwrap());
        // Both purify sigma on B; their A-marginals share the spectrum.
        let a1 = linalg::partial_trace(&rho, prep.shapes[0], Side::B).unwrap();
        let a2 = linalg::partial_trace(&want, prep.shapes[0], Side::B).unwrap();
        let (e1, e2) = (linalg::hermitian_eig(&a1).unwrap(), linalg::hermitian_eig(&a2).unwrap());
        for (x, y) in e1.values.iter().zip(&e2.values) {
            assert!((x - y).abs() < 1e-12);
        }
        let b = linalg::partial_trace(&rho, prep.shapes[0], Side::A).unwrap();
        assert!(linalg::max_abs_diff(&b, &sigma.matrix) < 1e-12);
    }

    #[test]
    fn separable_preparation_agrees_with_the_parent_route() {
        // A rank-one simulation from a parent POVM, turned into a
        // preparation, must reproduce the sandwiched parent statistics.
        let mut rng = random::rng(12);
        let parent = random::povm(3, 4, &mut rng);
        let response = (0..4).map(|_| vec![random::probabilities(2, &mut rng)]).collect();
        let pm = crate::compat::ParentModel { parent, response };
        let sim = one_sim_from_jm(&pm).unwrap();
        let sigma = DensityState::new(random::full_rank_density(3, &mut rng)).unwrap();
        let prep = sim_to_prep(&sim, &sigma).unwrap();
        assert!(prep.states.iter().zip(&prep.shapes).all(|(s, sh)| schmidt_rank(s, *sh, 1e-8).unwrap() == 1));
        let want = sandwich(&sigma, &pm.reconstruct().unwrap()).unwrap();
        assert!(prep.assemblage().unwrap().max_distance(&want).unwrap() < 1e-10);
    }
}
