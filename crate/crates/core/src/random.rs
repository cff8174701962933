//! Seeded random instances for tests, fixtures and see-saw restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::compat::ParentModel;
use crate::compress::PreparationModel;
use crate::linalg::{self, BipartiteShape, CMatrix, CVector, C64};
use crate::objects::{MeasurementSet, Povm};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) / 2f64.sqrt()
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` divided out.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = qr.unpack();
    for k in 0..d {
        let z = r[(k, k)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { linalg::ONE };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

pub fn pure_state(d: usize, rng: &mut impl Rng) -> CVector {
    let v = CVector::from_fn(d, |_, _| gaussian(rng));
    let n = v.norm();
    v / C64::from(n)
}

/// Random density matrix `G G* / tr(G G*)` with `G` of shape `d × rank`.
pub fn density(d: usize, rank: usize, rng: &mut impl Rng) -> CMatrix {
    let g = ginibre(d, rank, rng);
    let w = &g * g.adjoint();
    let t = w.trace().re;
    w.unscale(t)
}

/// Random full-rank density matrix with smallest eigenvalue bounded away
/// from zero, mixed with a little white noise.
pub fn full_rank_density(d: usize, rng: &mut impl Rng) -> CMatrix {
    let rho = density(d, d, rng);
    rho.scale(0.8) + linalg::identity(d).scale(0.2 / d as f64)
}

/// Random POVM `E_a = S^{-1/2} W_a S^{-1/2}` with Wishart `W_a` and
/// `S = Σ W_a`.
pub fn povm(d: usize, outcomes: usize, rng: &mut impl Rng) -> Vec<CMatrix> {
    let ws: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(d, d, rng);
            &g * g.adjoint()
        })
        .collect();
    let s = ws.iter().fold(CMatrix::zeros(d, d), |acc, w| acc + w);
    let s_inv = linalg::inv_sqrt(&s, 1e-14).expect("Wishart sum is full rank");
    ws.iter().map(|w| linalg::hermitian_part(&(&s_inv * w * &s_inv))).collect()
}

/// Random projective measurement in a Haar-random basis, basis vectors
/// assigned round-robin to `outcomes` outcomes.
pub fn projective(d: usize, outcomes: usize, rng: &mut impl Rng) -> Vec<CMatrix> {
    let u = haar_unitary(d, rng);
    let mut effects = vec![CMatrix::zeros(d, d); outcomes];
    for k in 0..d {
        let v: CVector = u.column(k).into_owned();
        effects[k % outcomes] += linalg::projector(&v);
    }
    effects
}

/// Random channel `d_in → d_out` with `count` Kraus operators, each of rank
/// at most `max_rank`. Built as `K_i = A_i S^{-1/2}` with `A_i` low-rank
/// Gaussian and `S = Σ A_i* A_i`.
pub fn kraus_ops(d_in: usize, d_out: usize, count: usize, max_rank: usize, rng: &mut impl Rng) -> Vec<CMatrix> {
    let r = max_rank.min(d_in).min(d_out).max(1);
    assert!(count * r >= d_in, "{count} Kraus operators of rank {r} cannot be complete on C^{d_in}");
    loop {
        let raw: Vec<CMatrix> = (0..count).map(|_| ginibre(d_out, r, rng) * ginibre(r, d_in, rng)).collect();
        let s = raw.iter().fold(CMatrix::zeros(d_in, d_in), |acc, a| acc + a.adjoint() * a);
        if let Ok(s_inv) = linalg::inv_sqrt(&s, 1e-10) {
            return raw.iter().map(|a| a * &s_inv).collect();
        }
    }
}

/// Random probability vector (flat Dirichlet).
pub fn probabilities(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>();
            -(1.0 - u).ln()
        })
        .collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

/// Random parent POVM with `parent_outcomes` effects and a random
/// stochastic response for each setting in `outcome_counts`.
pub fn parent_model(d: usize, parent_outcomes: usize, outcome_counts: &[usize], rng: &mut impl Rng) -> ParentModel {
    let parent = povm(d, parent_outcomes, rng);
    let response = (0..parent_outcomes).map(|_| outcome_counts.iter().map(|&o| probabilities(o, rng)).collect()).collect();
    ParentModel { parent, response }
}

/// Random preparation with `branches` pure states on `C^n ⊗ C^d` (so each
/// has Schmidt rank at most `n`) and random POVMs on `C^n`.
pub fn preparation_model(d: usize, n: usize, branches: usize, outcome_counts: &[usize], rng: &mut impl Rng) -> PreparationModel {
    let weights = probabilities(branches, rng);
    let states = (0..branches).map(|_| pure_state(n * d, rng)).collect();
    let measurements = (0..branches)
        .map(|_| MeasurementSet { povms: outcome_counts.iter().map(|&o| Povm { effects: povm(n, o, rng) }).collect() })
        .collect();
    PreparationModel { weights, states, shapes: vec![BipartiteShape::new(n, d); branches], measurements, rank_bound: n }
}
