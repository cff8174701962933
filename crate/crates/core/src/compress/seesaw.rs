//! Heuristic search for preparations with Schmidt rank at most `n`.
//!
//! The model has two kinds of branches. Deterministic-strategy branches
//! `T_λ` carry product states with a classical readout and make the `n = 1`
//! optimum reachable in a single step. The `R` quantum branches carry
//! states `ρ_k` on `C^n ⊗ C^d`, which have Schmidt number at most `n` by
//! construction, and measurements `N_{a|x,k}` on `C^n`. For fixed
//! measurements the largest achievable visibility is an SDP in the states,
//! and for fixed states an SDP in the measurements; alternating the two
//! never decreases the visibility. Every returned visibility is realized by
//! an explicit model and is therefore a lower bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PreparationModel;
use crate::compat::Strategies;
use crate::error::{Error, Result};
use crate::linalg::{self, BipartiteShape, CMatrix, CVector, C64};
use crate::objects::{Assemblage, MeasurementSet, Povm, Validate};
use crate::random;
use crate::sdp::{self, MatTerm, SdpProblem, SdpStatus};

#[derive(Debug, Clone)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Quantum branches per restart; defaults to the total outcome count.
    pub branches: Option<usize>,
    pub max_rounds: usize,
    /// Stop once the visibility gained over `stall_rounds` rounds is below
    /// this.
    pub stall_tol: f64,
    pub stall_rounds: usize,
    pub sdp_tol: f64,
    pub cap: usize,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            seed: 0,
            branches: None,
            max_rounds: 200,
            stall_tol: 1e-7,
            stall_rounds: 5,
            sdp_tol: 1e-7,
            cap: crate::compat::DEFAULT_STRATEGY_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeesawResult {
    pub model: PreparationModel,
    /// Largest visibility realized by `model`; a lower bound only.
    pub visibility: f64,
    /// Largest entrywise deviation of the model's assemblage from the
    /// target mixed at `visibility`.
    pub reproduction_error: f64,
    /// False when the best restart stopped on the round limit or a solver
    /// failure rather than by stalling.
    pub converged: bool,
    /// True when `n ≥ d` and the purification model settles the question.
    pub exact: bool,
    pub best_restart: usize,
    pub rounds: usize,
}

/// Searches for a preparation with Schmidt rank at most `n` reproducing
/// `v σ_{a|x} + (1 − v) tr(σ_{a|x}) σ` for the largest `v` it can find.
pub fn seesaw_n_prep(asm: &Assemblage, n: usize, opts: &SeesawOptions) -> Result<SeesawResult> {
    asm.validate().into_result()?;
    if n == 0 {
        return Err(Error::Validation("rank bound n must be at least 1".into()));
    }
    let d = asm.dim();
    if n >= d && linalg::inv_sqrt(&asm.total, linalg::RANK_TOL).is_ok() {
        return purification_model(asm, n);
    }
    let strategies = Strategies::new(&asm.outcome_counts(), opts.cap)?;
    let problem = Problem::new(asm, n, strategies, opts);
    let runs: Vec<Result<Run>> =
        (0..opts.restarts.max(1)).into_par_iter().map(|r| problem.restart(opts.seed.wrapping_add(r as u64))).collect();
    let mut best: Option<(usize, Run)> = None;
    let mut first_err = None;
    for (i, run) in runs.into_iter().enumerate() {
        match run {
            Ok(run) => {
                if best.as_ref().is_none_or(|(_, b)| run.visibility > b.visibility + 1e-12) {
                    best = Some((i, run));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((best_restart, run)) = best else {
        return Err(first_err.unwrap_or_else(|| Error::Solver("no see-saw restart succeeded".into())));
    };
    let model = problem.model(&run)?;
    let target = asm.depolarized(run.visibility);
    let reproduction_error = model.assemblage()?.max_distance(&target)?;
    Ok(SeesawResult {
        model,
        visibility: run.visibility,
        reproduction_error,
        converged: run.converged,
        exact: false,
        best_restart,
        rounds: run.rounds,
    })
}

/// `n ≥ d` with full-rank `σ`: purify `σ` and let Alice measure the
/// transposed unsandwiched effects. Visibility one, exactly.
fn purification_model(asm: &Assemblage, n: usize) -> Result<SeesawResult> {
    let d = asm.dim();
    let ms = crate::objects::unsandwich(asm)?;
    let e = linalg::hermitian_eig(&asm.total)?;
    let povms = ms
        .povms
        .iter()
        .map(|p| Povm { effects: p.effects.iter().map(|m| linalg::hermitian_part(&linalg::transpose_in_basis(m, &e.vectors))).collect() })
        .collect();
    let model = PreparationModel {
        weights: vec![1.0],
        states: vec![linalg::purify(&asm.total)?],
        shapes: vec![BipartiteShape::new(d, d)],
        measurements: vec![MeasurementSet { povms }],
        rank_bound: n,
    };
    let reproduction_error = model.assemblage()?.max_distance(asm)?;
    Ok(SeesawResult { model, visibility: 1.0, reproduction_error, converged: true, exact: true, best_restart: 0, rounds: 0 })
}

struct Problem<'a> {
    asm: &'a Assemblage,
    noise: Vec<Vec<CMatrix>>,
    n: usize,
    branches: usize,
    strategies: Strategies,
    opts: &'a SeesawOptions,
}

/// `[branch][setting][outcome]` effects on `C^n`.
type BranchMeasurements = Vec<Vec<Vec<CMatrix>>>;

#[derive(Debug, Clone)]
struct Run {
    visibility: f64,
    hidden: Vec<CMatrix>,
    states: Vec<CMatrix>,
    measurements: BranchMeasurements,
    converged: bool,
    rounds: usize,
}

impl<'a> Problem<'a> {
    fn new(asm: &'a Assemblage, n: usize, strategies: Strategies, opts: &'a SeesawOptions) -> Self {
        let branches = opts.branches.unwrap_or_else(|| asm.outcome_counts().iter().sum()).max(1);
        let noise = asm.depolarized(0.0).members;
        Self { asm, noise, n, branches, strategies, opts }
    }

    fn shape(&self) -> BipartiteShape {
        BipartiteShape::new(self.n, self.asm.dim())
    }

    fn restart(&self, seed: u64) -> Result<Run> {
        let mut rng = random::rng(seed);
        let counts = self.asm.outcome_counts();
        let mut measurements: Vec<Vec<Vec<CMatrix>>> =
            (0..self.branches).map(|_| counts.iter().map(|&o| random::povm(self.n, o, &mut rng)).collect()).collect();
        let mut current: Option<Run> = None;
        let mut history: Vec<f64> = Vec::new();
        let mut converged = false;
        for round in 0..self.opts.max_rounds {
            let Ok((v, hidden, states)) = self.state_step(&measurements) else { break };
            let mut run = Run { visibility: v, hidden, states, measurements: measurements.clone(), converged: false, rounds: round + 1 };
            if let Ok((v2, hidden2, meas2)) = self.measurement_step(&run.states) {
                if v2 >= run.visibility {
                    measurements = meas2;
                    run.visibility = v2;
                    run.hidden = hidden2;
                    run.measurements = measurements.clone();
                }
            }
            let v = run.visibility;
            current = Some(run);
            history.push(v);
            if v >= 1.0 - 1e-9 {
                converged = true;
                break;
            }
            let k = self.opts.stall_rounds;
            if history.len() > k && v - history[history.len() - 1 - k] < self.opts.stall_tol {
                converged = true;
                break;
            }
        }
        let mut run = current.ok_or_else(|| Error::Solver("see-saw state step failed on the first round".into()))?;
        run.converged = converged;
        Ok(run)
    }

    /// Visibility block `v` with slack `s`, `v + s = 1`, objective `max v`.
    fn scaffold(&self, p: &mut SdpProblem) -> usize {
        let v = p.add_block("visibility", 1);
        let s = p.add_block("visibility_slack", 1);
        p.add_constraint(&[(v, 0, 0, linalg::ONE), (s, 0, 0, linalg::ONE)], 1.0);
        p.set_objective(&[(v, 0, 0, C64::from(-1.0))]);
        v
    }

    fn hidden_terms(&self, hidden: &[usize], x: usize, a: usize) -> Vec<MatTerm> {
        (0..self.strategies.len())
            .filter(|&l| self.strategies.outcome(l, x) == a)
            .map(|l| MatTerm::Scaled { block: hidden[l], coeff: 1.0 })
            .collect()
    }

    fn solve(&self, p: &SdpProblem) -> Result<Vec<CMatrix>> {
        let sol = sdp::solve(p, self.opts.sdp_tol)?;
        if sol.status != SdpStatus::Optimal || !sdp::verify_certificate(p, &sol, self.opts.sdp_tol).ok {
            return Err(Error::Solver(format!("see-saw step ended with {:?}", sol.status)));
        }
        Ok(sol.block_values)
    }

    fn state_step(&self, meas: &[Vec<Vec<CMatrix>>]) -> Result<(f64, Vec<CMatrix>, Vec<CMatrix>)> {
        let d = self.asm.dim();
        let shape = self.shape();
        let mut p = SdpProblem::new();
        let hidden: Vec<usize> = (0..self.strategies.len()).map(|l| p.add_block(format!("hidden{l}"), d)).collect();
        let states: Vec<usize> = (0..self.branches).map(|k| p.add_block(format!("state{k}"), shape.total())).collect();
        let v = self.scaffold(&mut p);
        let id_n = linalg::identity(self.n);

        let mut total: Vec<MatTerm> = hidden.iter().map(|&b| MatTerm::Scaled { block: b, coeff: 1.0 }).collect();
        total.extend(states.iter().map(|&b| MatTerm::PartialTraceA { block: b, op: id_n.clone(), shape }));
        p.add_matrix_equality(&total, &self.asm.total);
        for (x, row) in self.asm.members.iter().enumerate() {
            for a in 0..row.len().saturating_sub(1) {
                let mut terms = self.hidden_terms(&hidden, x, a);
                for (k, &b) in states.iter().enumerate() {
                    terms.push(MatTerm::PartialTraceA { block: b, op: meas[k][x][a].clone(), shape });
                }
                terms.push(MatTerm::ScalarTimes { block: v, matrix: -(&row[a] - &self.noise[x][a]) });
                p.add_matrix_equality(&terms, &self.noise[x][a]);
            }
        }
        let x = self.solve(&p)?;
        Ok((
            x[v][(0, 0)].re.clamp(0.0, 1.0),
            hidden.iter().map(|&b| x[b].clone()).collect(),
            states.iter().map(|&b| x[b].clone()).collect(),
        ))
    }

    fn measurement_step(&self, states: &[CMatrix]) -> Result<(f64, Vec<CMatrix>, BranchMeasurements)> {
        let d = self.asm.dim();
        let shape = self.shape();
        let counts = self.asm.outcome_counts();
        let mut p = SdpProblem::new();
        let hidden: Vec<usize> = (0..self.strategies.len()).map(|l| p.add_block(format!("hidden{l}"), d)).collect();
        let meas: Vec<Vec<Vec<usize>>> = (0..self.branches)
            .map(|k| {
                counts.iter().enumerate().map(|(x, &o)| (0..o).map(|a| p.add_block(format!("povm{k}_{x}_{a}"), self.n)).collect()).collect()
            })
            .collect();
        let v = self.scaffold(&mut p);
        let id_n = linalg::identity(self.n);
        for row in &meas {
            for effects in row {
                let terms: Vec<MatTerm> = effects.iter().map(|&b| MatTerm::Scaled { block: b, coeff: 1.0 }).collect();
                p.add_matrix_equality(&terms, &id_n);
            }
        }
        let mut remainder = self.asm.total.clone();
        for rho in states {
            remainder -= linalg::partial_trace(rho, shape, linalg::Side::A)?;
        }
        let total: Vec<MatTerm> = hidden.iter().map(|&b| MatTerm::Scaled { block: b, coeff: 1.0 }).collect();
        p.add_matrix_equality(&total, &linalg::hermitian_part(&remainder));
        for (x, row) in self.asm.members.iter().enumerate() {
            for a in 0..row.len().saturating_sub(1) {
                let mut terms = self.hidden_terms(&hidden, x, a);
                for (k, rho) in states.iter().enumerate() {
                    terms.push(MatTerm::ContractA { block: meas[k][x][a], rho: rho.clone(), shape });
                }
                terms.push(MatTerm::ScalarTimes { block: v, matrix: -(&row[a] - &self.noise[x][a]) });
                p.add_matrix_equality(&terms, &self.noise[x][a]);
            }
        }
        let sol = self.solve(&p)?;
        let measurements = meas
            .iter()
            .map(|row| row.iter().map(|effects| clean_povm(effects.iter().map(|&b| sol[b].clone()).collect())).collect())
            .collect::<Result<Vec<_>>>()?;
        Ok((sol[v][(0, 0)].re.clamp(0.0, 1.0), hidden.iter().map(|&b| sol[b].clone()).collect(), measurements))
    }

    fn model(&self, run: &Run) -> Result<PreparationModel> {
        let d = self.asm.dim();
        let shape = self.shape();
        let mut weights = Vec::new();
        let mut states = Vec::new();
        let mut shapes = Vec::new();
        let mut measurements = Vec::new();
        let mut split = |rho: &CMatrix, sh: BipartiteShape, ms: &MeasurementSet| {
            let e = linalg::eig_unchecked(&linalg::hermitian_part(rho));
            for (i, &w) in e.values.iter().enumerate() {
                if w <= 1e-12 {
                    continue;
                }
                let v: CVector = e.vectors.column(i).into_owned();
                weights.push(w);
                states.push(v);
                shapes.push(sh);
                measurements.push(ms.clone());
            }
        };
        for (l, t) in run.hidden.iter().enumerate() {
            let readout = MeasurementSet {
                povms: self
                    .strategies
                    .kernel(l)
                    .iter()
                    .map(|row| Povm { effects: row.iter().map(|&p| CMatrix::from_element(1, 1, C64::from(p))).collect() })
                    .collect(),
            };
            split(t, BipartiteShape::new(1, d), &readout);
        }
        for (rho, meas) in run.states.iter().zip(&run.measurements) {
            let ms = MeasurementSet { povms: meas.iter().map(|effects| Povm { effects: effects.clone() }).collect() };
            split(rho, shape, &ms);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let model = PreparationModel { weights, states, shapes, measurements, rank_bound: self.n };
        model.validate().into_result()?;
        Ok(model)
    }
}

/// Clips negative eigenvalues and rescales so the effects sum to the
/// identity exactly.
fn clean_povm(effects: Vec<CMatrix>) -> Result<Vec<CMatrix>> {
    let n = effects[0].nrows();
    let clipped: Vec<CMatrix> = effects.iter().map(|e| linalg::eig_unchecked(&linalg::hermitian_part(e)).map(|v| v.max(0.0))).collect();
    let s = clipped.iter().fold(CMatrix::zeros(n, n), |acc, e| acc + e);
    let fix = linalg::inv_sqrt(&s, 1e-12)?;
    Ok(clipped.iter().map(|e| linalg::hermitian_part(&(&fix * e * &fix))).collect())
}
