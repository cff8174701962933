//! Small dense semidefinite programs over complex Hermitian blocks.
//!
//! A problem has PSD block variables `X_b`, real affine equality
//! constraints `Σ_b tr(H_{ib} X_b) = b_i` with Hermitian `H_{ib}`, and an
//! optional linear objective `min Σ_b tr(C_b X_b)`. Without an objective it
//! is a feasibility problem.
//!
//! [`solve`] runs a primal-dual interior-point method (see [`ipm`]) and
//! never reports infeasibility without a Farkas certificate. Every result
//! can be re-checked with [`verify_certificate`], which recomputes all
//! residuals from the problem data alone.

mod ipm;
mod projection;
mod verify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, BipartiteShape, CMatrix, C64};

pub use verify::{verify_certificate, CertificateCheck, CertificateReport};

/// One coefficient `H[row, col] = value` of a Hermitian constraint matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    #[serde(with = "crate::json::complex")]
    pub value: C64,
}

/// The part of a constraint (or objective) that touches one block. The
/// entries describe a Hermitian matrix `H`; the term contributes
/// `tr(H X_block)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub block: usize,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<Term>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub label: String,
    pub dim: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub blocks: Vec<BlockSpec>,
    pub constraints: Vec<Constraint>,
    /// Minimized when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<Vec<Term>>,
}

/// One linear piece of a matrix-valued constraint `Σ_k L_k(X) = T`.
#[derive(Debug, Clone)]
pub enum MatTerm {
    /// `coeff · X_block`.
    Scaled { block: usize, coeff: f64 },
    /// `x · matrix` for a 1×1 block holding the scalar `x`.
    ScalarTimes { block: usize, matrix: CMatrix },
    /// `tr_A[(op ⊗ I) X_block]` for a block on `A ⊗ B`.
    PartialTraceA { block: usize, op: CMatrix, shape: BipartiteShape },
    /// `tr_A[(X_block ⊗ I) rho]` for a block on `A` and fixed `rho`.
    ContractA { block: usize, rho: CMatrix, shape: BipartiteShape },
}

impl MatTerm {
    /// Raw functional of output entry `(i, j)`: list of
    /// `(block, r, c, coeff)` meaning `Σ coeff · X_block[r, c]`.
    fn functional(&self, i: usize, j: usize, out: &mut Vec<(usize, usize, usize, C64)>) {
        match self {
            MatTerm::Scaled { block, coeff } => out.push((*block, i, j, C64::from(*coeff))),
            MatTerm::ScalarTimes { block, matrix } => {
                let v = matrix[(i, j)];
                if v != linalg::ZERO {
                    out.push((*block, 0, 0, v));
                }
            }
            MatTerm::PartialTraceA { block, op, shape } => {
                let db = shape.dim_b;
                for a1 in 0..shape.dim_a {
                    for a2 in 0..shape.dim_a {
                        let v = op[(a2, a1)];
                        if v != linalg::ZERO {
                            out.push((*block, a1 * db + i, a2 * db + j, v));
                        }
                    }
                }
            }
            MatTerm::ContractA { block, rho, shape } => {
                let db = shape.dim_b;
                for a1 in 0..shape.dim_a {
                    for a2 in 0..shape.dim_a {
                        let v = rho[(a1 * db + i, a2 * db + j)];
                        if v != linalg::ZERO {
                            out.push((*block, a2, a1, v));
                        }
                    }
                }
            }
        }
    }
}

/// Converts raw functionals `Re(coeff · X[r, c])` into Hermitian terms,
/// merging duplicates and dropping zeros.
fn hermitize(raw: &[(usize, usize, usize, C64)]) -> Vec<Term> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<(usize, usize, usize), C64> = BTreeMap::new();
    for &(b, r, c, v) in raw {
        *acc.entry((b, c, r)).or_insert(linalg::ZERO) += v * 0.5;
        *acc.entry((b, r, c)).or_insert(linalg::ZERO) += v.conj() * 0.5;
    }
    let mut terms: Vec<Term> = Vec::new();
    for ((b, p, q), v) in acc {
        if v.norm() <= 1e-15 {
            continue;
        }
        match terms.last_mut() {
            Some(t) if t.block == b => t.entries.push(Entry { row: p, col: q, value: v }),
            _ => terms.push(Term { block: b, entries: vec![Entry { row: p, col: q, value: v }] }),
        }
    }
    terms
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, label: impl Into<String>, dim: usize) -> usize {
        self.blocks.push(BlockSpec { label: label.into(), dim });
        self.blocks.len() - 1
    }

    /// Adds `Σ Re(coeff · X_block[r, c]) = rhs` from raw
    /// `(block, r, c, coeff)` tuples. Constraints with no surviving
    /// coefficient and zero right-hand side are dropped.
    pub fn add_constraint(&mut self, raw: &[(usize, usize, usize, C64)], rhs: f64) {
        let terms = hermitize(raw);
        if terms.is_empty() && rhs.abs() <= 1e-14 {
            return;
        }
        self.constraints.push(Constraint { terms, rhs });
    }

    /// Sets `min Σ Re(coeff · X_block[r, c])`.
    pub fn set_objective(&mut self, raw: &[(usize, usize, usize, C64)]) {
        self.objective = Some(hermitize(raw));
    }

    /// Adds `Σ_k L_k(X) = target` for Hermiticity-preserving maps `L_k`
    /// with a Hermitian target: real parts of the upper triangle and
    /// imaginary parts strictly above the diagonal.
    pub fn add_matrix_equality(&mut self, terms: &[MatTerm], target: &CMatrix) {
        let d = target.nrows();
        let mut raw = Vec::new();
        for i in 0..d {
            for j in i..d {
                raw.clear();
                for t in terms {
                    t.functional(i, j, &mut raw);
                }
                self.add_constraint(&raw, target[(i, j)].re);
                if i < j {
                    let rotated: Vec<_> = raw.iter().map(|&(b, r, c, v)| (b, r, c, v * C64::new(0.0, -1.0))).collect();
                    self.add_constraint(&rotated, target[(i, j)].im);
                }
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.blocks.iter().any(|b| b.dim == 0) {
            return Err(Error::Dimension("blocks must have positive dimension".into()));
        }
        let objective = self.objective.iter().map(|o| (o, 0.0));
        let all = self.constraints.iter().map(|c| (&c.terms, c.rhs)).chain(objective);
        for (i, (terms, rhs)) in all.enumerate() {
            for t in terms {
                let Some(spec) = self.blocks.get(t.block) else {
                    return Err(Error::Dimension(format!("constraint {i} references missing block {}", t.block)));
                };
                if t.entries.iter().any(|e| e.row >= spec.dim || e.col >= spec.dim) {
                    return Err(Error::Dimension(format!(
                        "constraint {i} has an entry outside block {} of dimension {}",
                        t.block, spec.dim
                    )));
                }
            }
            if !rhs.is_finite() {
                return Err(Error::Validation(format!("constraint {i} has a non-finite right-hand side")));
            }
        }
        Ok(())
    }

    /// Dense Hermitian part of a list of terms for one block, as the
    /// verifier sees it.
    pub(crate) fn dense_term(&self, terms: &[Term], block: usize) -> CMatrix {
        let n = self.blocks[block].dim;
        let mut h = CMatrix::zeros(n, n);
        for t in terms.iter().filter(|t| t.block == block) {
            for e in &t.entries {
                h[(e.row, e.col)] += e.value;
            }
        }
        linalg::hermitian_part(&h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalTrouble,
}

/// Farkas ray `y` with `Σ_i y_i H_i ⪯ 0` and `b·y > 0`; no PSD `X` can
/// satisfy the constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarkasCertificate {
    pub y: Vec<f64>,
    /// `b·y`.
    pub value: f64,
    /// Largest eigenvalue of `Σ_i y_i H_i` over all blocks.
    pub max_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    #[serde(with = "crate::json::matrices")]
    pub block_values: Vec<CMatrix>,
    pub dual_values: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `max_i |A(X)_i − b_i| / (1 + max_i |b_i|)`.
    pub primal_residual: f64,
    /// Negative part of `λ_min(C − A*(y))`, relative to `1 + ‖C‖`.
    pub dual_residual: f64,
    /// `|p − d| / (1 + |p| + |d|)`.
    pub gap: f64,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<FarkasCertificate>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iterations: 500 }
    }
}

/// Solves with default options except the tolerance.
pub fn solve(p: &SdpProblem, tol: f64) -> Result<SdpSolution> {
    solve_with(p, SolverOptions { tol, ..SolverOptions::default() })
}

/// Optimization problems go straight to the interior-point method; if it
/// does not converge, or for pure feasibility problems, an L1 phase-one
/// problem decides feasibility and yields a bounded Farkas ray otherwise.
pub fn solve_with(p: &SdpProblem, opts: SolverOptions) -> Result<SdpSolution> {
    p.check()?;
    let compiled = ipm::Compiled::new(p);
    if p.objective.is_some() {
        let run = ipm::run(&compiled, opts);
        let sol = compiled.solution_from(p, &run, opts.tol);
        if sol.status == SdpStatus::Optimal {
            return Ok(sol);
        }
    }
    let phase1 = ipm::Compiled::phase_one(p);
    let run = ipm::run(&phase1, opts);
    let m = p.constraints.len();
    let b_scale = 1.0 + p.constraints.iter().fold(0.0f64, |a, c| a.max(c.rhs.abs()));

    let x: Vec<CMatrix> = run.x[..p.blocks.len()].to_vec();
    let residual = verify::primal_residual(p, &x) / b_scale;
    let feasible = residual <= opts.tol && x.iter().all(|b| linalg::min_eigenvalue(b) >= -opts.tol);

    if feasible {
        if p.objective.is_none() {
            return Ok(feasibility_solution(p, x, residual, run.iterations));
        }
        // Feasible but phase two did not converge: unbounded or badly
        // conditioned. Neither is a certified answer.
        let mut sol = feasibility_solution(p, x, residual, run.iterations);
        sol.status = SdpStatus::NumericalTrouble;
        return Ok(sol);
    }

    let y: Vec<f64> = run.y[..m].to_vec();
    let cert = verify::farkas(p, &y);
    let bound = opts.tol * (1.0 + y.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    if cert.value > opts.tol && cert.max_eigenvalue <= bound {
        return Ok(SdpSolution {
            status: SdpStatus::Infeasible,
            block_values: x,
            dual_values: y,
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            primal_residual: residual,
            dual_residual: 0.0,
            gap: f64::NAN,
            iterations: run.iterations,
            certificate: Some(cert),
        });
    }

    if p.objective.is_none() {
        if let Some(x) = projection::alternating(p, &x, opts.tol) {
            let residual = verify::primal_residual(p, &x) / b_scale;
            return Ok(feasibility_solution(p, x, residual, run.iterations));
        }
    }

    let mut sol = feasibility_solution(p, x, residual, run.iterations);
    sol.status = SdpStatus::NumericalTrouble;
    Ok(sol)
}

fn feasibility_solution(p: &SdpProblem, x: Vec<CMatrix>, residual: f64, iterations: usize) -> SdpSolution {
    let pobj = p.objective.as_ref().map_or(0.0, |o| (0..p.blocks.len()).map(|b| linalg::trace_product(&p.dense_term(o, b), &x[b])).sum());
    SdpSolution {
        status: SdpStatus::Optimal,
        block_values: x,
        dual_values: vec![0.0; p.constraints.len()],
        primal_objective: pobj,
        dual_objective: 0.0,
        primal_residual: residual,
        dual_residual: 0.0,
        gap: 0.0,
        iterations,
        certificate: None,
    }
}

/// Debug dump of a problem and (optionally) its solution under the
/// `povmc-sdp/1` schema.
pub fn dump(p: &SdpProblem, s: Option<&SdpSolution>) -> Result<serde_json::Value> {
    Ok(serde_json::json!({
        "schema": crate::json::SDP_SCHEMA,
        "kind": "sdp",
        "data": { "problem": p, "solution": s },
    }))
}
