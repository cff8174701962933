use serde::{Deserialize, Serialize};

use super::{CompatOptions, SdpRecord};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::sdp::{self, MatTerm, SdpProblem, SdpStatus};

/// Deterministic strategies `λ ∈ Π_x [o_x]` in mixed-radix order, the last
/// setting varying fastest.
#[derive(Debug, Clone)]
pub struct Strategies {
    counts: Vec<usize>,
    total: usize,
}

impl Strategies {
    pub fn new(counts: &[usize], cap: usize) -> Result<Self> {
        let mut total = 1usize;
        for &c in counts {
            total = total.saturating_mul(c);
        }
        if total > cap {
            return Err(Error::CapExceeded { count: total, cap });
        }
        Ok(Self { counts: counts.to_vec(), total })
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Outcome that strategy `lambda` assigns to setting `x`.
    pub fn outcome(&self, lambda: usize, x: usize) -> usize {
        let stride: usize = self.counts[x + 1..].iter().product();
        (lambda / stride) % self.counts[x]
    }

    pub fn tuple(&self, lambda: usize) -> Vec<usize> {
        (0..self.counts.len()).map(|x| self.outcome(lambda, x)).collect()
    }

    /// Deterministic response kernel `p(a|x,λ) = δ_{a, λ(x)}`.
    pub fn kernel(&self, lambda: usize) -> Vec<Vec<f64>> {
        (0..self.counts.len())
            .map(|x| {
                let mut row = vec![0.0; self.counts[x]];
                row[self.outcome(lambda, x)] = 1.0;
                row
            })
            .collect()
    }
}

/// Constraint index ranges of the parent SDP, used to read dual operators
/// back out of a Farkas ray.
#[derive(Debug, Clone)]
pub(crate) struct ParentLayout {
    pub strategies: Strategies,
    pub blocks: Vec<usize>,
    pub total_rows: std::ops::Range<usize>,
    /// `(x, a, range)` for every constrained outcome `a < o_x − 1`.
    pub marginal_rows: Vec<(usize, usize, std::ops::Range<usize>)>,
    pub eta_block: Option<usize>,
}

/// Builds the parent SDP. With `noise = Some(N)`, the targets become
/// `η T + (1 − η) N` for a scalar block `η ∈ [0, 1]` and the objective
/// maximizes `η`.
pub(crate) fn build(
    total: &CMatrix,
    targets: &[Vec<CMatrix>],
    noise: Option<&[Vec<CMatrix>]>,
    cap: usize,
) -> Result<(SdpProblem, ParentLayout)> {
    let counts: Vec<usize> = targets.iter().map(|t| t.len()).collect();
    let strategies = Strategies::new(&counts, cap)?;
    let d = total.nrows();
    let mut p = SdpProblem::new();
    let blocks: Vec<usize> = (0..strategies.len()).map(|l| p.add_block(format!("lambda{:?}", strategies.tuple(l)), d)).collect();
    let eta_block = noise.map(|_| {
        let eta = p.add_block("eta", 1);
        let slack = p.add_block("eta_slack", 1);
        p.add_constraint(&[(eta, 0, 0, linalg::ONE), (slack, 0, 0, linalg::ONE)], 1.0);
        p.set_objective(&[(eta, 0, 0, C64::from(-1.0))]);
        eta
    });

    let start = p.constraints.len();
    let all: Vec<MatTerm> = blocks.iter().map(|&b| MatTerm::Scaled { block: b, coeff: 1.0 }).collect();
    p.add_matrix_equality(&all, total);
    let total_rows = start..p.constraints.len();

    let mut marginal_rows = Vec::new();
    for (x, row) in targets.iter().enumerate() {
        for a in 0..row.len().saturating_sub(1) {
            let mut terms: Vec<MatTerm> = (0..strategies.len())
                .filter(|&l| strategies.outcome(l, x) == a)
                .map(|l| MatTerm::Scaled { block: blocks[l], coeff: 1.0 })
                .collect();
            let start = p.constraints.len();
            match (noise, eta_block) {
                (Some(n), Some(eta)) => {
                    terms.push(MatTerm::ScalarTimes { block: eta, matrix: -(&row[a] - &n[x][a]) });
                    p.add_matrix_equality(&terms, &n[x][a]);
                }
                _ => p.add_matrix_equality(&terms, &row[a]),
            }
            marginal_rows.push((x, a, start..p.constraints.len()));
        }
    }
    Ok((p, ParentLayout { strategies, blocks, total_rows, marginal_rows, eta_block }))
}

/// `Σ_{k ∈ rows} y_k H_k` read off the first term of each row.
pub(crate) fn dual_operator(p: &SdpProblem, y: &[f64], rows: std::ops::Range<usize>, d: usize) -> CMatrix {
    let mut out = CMatrix::zeros(d, d);
    for k in rows {
        if let Some(t) = p.constraints[k].terms.first() {
            out += p.dense_term(std::slice::from_ref(t), t.block).scale(y[k]);
        }
    }
    out
}

/// Dual operators `(W_0, W_{a|x})` with the last outcome of every setting
/// set to zero.
pub(crate) fn witness_operators(p: &SdpProblem, layout: &ParentLayout, y: &[f64], d: usize) -> (CMatrix, Vec<Vec<CMatrix>>) {
    let w0 = dual_operator(p, y, layout.total_rows.clone(), d);
    let mut w: Vec<Vec<CMatrix>> = layout.strategies.counts().iter().map(|&o| vec![CMatrix::zeros(d, d); o]).collect();
    for (x, a, rows) in &layout.marginal_rows {
        w[*x][*a] = dual_operator(p, y, rows.clone(), d);
    }
    (w0, w)
}

/// `max_λ λ_max(W_0 + Σ_x W_{λ(x)|x})`.
pub(crate) fn max_strategy_eigenvalue(strategies: &Strategies, w0: &CMatrix, w: &[Vec<CMatrix>]) -> f64 {
    (0..strategies.len())
        .map(|l| {
            let mut s = w0.clone();
            for (x, wx) in w.iter().enumerate() {
                s += &wx[strategies.outcome(l, x)];
            }
            linalg::max_eigenvalue(&s)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Dual witness read off a Farkas ray: operators `W_0` and `W_{a|x}` (the
/// last outcome of each setting is zero) such that every deterministic
/// strategy satisfies `W_0 + Σ_x W_{λ(x)|x} ⪯ λ_max`. Any feasible family
/// then obeys `tr(W_0 total) + Σ tr(W_{a|x} target_{a|x}) ≤ λ_max⁺ tr(total)`,
/// so a positive `margin` certifies infeasibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualWitness {
    #[serde(with = "crate::json::matrix")]
    pub w0: CMatrix,
    #[serde(with = "crate::json::matrices2")]
    pub w: Vec<Vec<CMatrix>>,
    /// `tr(W_0 total) + Σ tr(W_{a|x} target_{a|x})`.
    pub value: f64,
    pub max_eigenvalue: f64,
    /// `value − λ_max⁺ tr(total)`.
    pub margin: f64,
}

impl DualWitness {
    /// Re-evaluates the witness on another target family with the same
    /// total.
    pub fn evaluate(&self, total: &CMatrix, targets: &[Vec<CMatrix>]) -> f64 {
        let mut v = linalg::trace_product(&self.w0, total);
        for (wx, tx) in self.w.iter().zip(targets) {
            for (w, t) in wx.iter().zip(tx) {
                v += linalg::trace_product(w, t);
            }
        }
        v
    }
}

pub(crate) enum Decision {
    Feasible { blocks: Vec<CMatrix>, strategies: Strategies, record: SdpRecord },
    Infeasible { witness: DualWitness, record: SdpRecord },
}

/// Solves the feasibility version of the parent SDP and re-verifies the
/// answer. Undecided or unverifiable outcomes are errors, never guesses.
pub(crate) fn decide(total: &CMatrix, targets: &[Vec<CMatrix>], opts: CompatOptions) -> Result<Decision> {
    let d = total.nrows();
    let (problem, layout) = build(total, targets, None, opts.cap)?;
    let solution = sdp::solve(&problem, opts.tol)?;
    let record = SdpRecord { problem, solution };
    let report = record.verify(opts.tol);
    if !report.ok {
        return Err(Error::Solver(format!(
            "{:?} answer failed verification: {:?}",
            record.solution.status,
            report.breaches().iter().map(|c| &c.name).collect::<Vec<_>>()
        )));
    }
    match record.solution.status {
        SdpStatus::Optimal => {
            let blocks = layout.blocks.iter().map(|&b| record.solution.block_values[b].clone()).collect();
            Ok(Decision::Feasible { blocks, strategies: layout.strategies, record })
        }
        SdpStatus::Infeasible => {
            let y = &record.solution.dual_values;
            let (w0, w) = witness_operators(&record.problem, &layout, y, d);
            let scale = total.trace().re;
            let max_eigenvalue = max_strategy_eigenvalue(&layout.strategies, &w0, &w);
            let mut witness = DualWitness { w0, w, value: 0.0, max_eigenvalue, margin: 0.0 };
            witness.value = witness.evaluate(total, targets);
            witness.margin = witness.value - scale * max_eigenvalue.max(0.0);
            if witness.margin <= 0.0 {
                return Err(Error::Solver(format!("infeasibility ray has non-positive margin {:.3e}", witness.margin)));
            }
            Ok(Decision::Infeasible { witness, record })
        }
        SdpStatus::NumericalTrouble => Err(Error::Solver("parent SDP undecided".into())),
    }
}

/// Drops numerically empty blocks and rescales so that the kept blocks sum
/// to `total` exactly: `X ↦ total^{1/2} S^{-1/2} X S^{-1/2} total^{1/2}` with
/// `S = Σ X`. Returns the kept strategy indices and blocks.
pub(crate) fn clean_blocks(blocks: Vec<CMatrix>, total: &CMatrix) -> Result<(Vec<usize>, Vec<CMatrix>)> {
    let d = total.nrows();
    let floor = 1e-13 * total.trace().re.max(1.0);
    let mut kept: Vec<(usize, CMatrix)> = blocks
        .into_iter()
        .enumerate()
        .map(|(l, b)| (l, linalg::hermitian_part(&b)))
        .filter(|(_, b)| b.trace().re > floor)
        .map(|(l, b)| (l, linalg::eig_unchecked(&b).map(|v| v.max(0.0))))
        .collect();
    let s = kept.iter().fold(CMatrix::zeros(d, d), |acc, (_, b)| acc + b);
    let root = linalg::matrix_sqrt(total)?;
    let fix = &root * linalg::pinv_sqrt(&s, linalg::RANK_TOL)?;
    for (_, b) in kept.iter_mut() {
        *b = linalg::hermitian_part(&(&fix * &*b * fix.adjoint()));
    }
    Ok(kept.into_iter().unzip())
}
