//! Independent re-verification of solver output.
//!
//! Everything here works from the dense Hermitian constraint matrices of
//! the problem and plain traces, sharing no code with the solver loop.

#![allow(clippy::needless_range_loop)]

use serde::{Deserialize, Serialize};

use super::{FarkasCertificate, SdpProblem, SdpSolution, SdpStatus};
use crate::linalg::{self, CMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub status: SdpStatus,
    pub checks: Vec<CertificateCheck>,
    pub ok: bool,
}

impl CertificateReport {
    fn push(&mut self, name: &str, value: f64, tolerance: f64) {
        let ok = value <= tolerance;
        self.ok &= ok;
        self.checks.push(CertificateCheck { name: name.into(), value, tolerance, ok });
    }

    pub fn breaches(&self) -> Vec<&CertificateCheck> {
        self.checks.iter().filter(|c| !c.ok).collect()
    }
}

fn dense_constraints(p: &SdpProblem) -> Vec<Vec<CMatrix>> {
    p.constraints.iter().map(|c| (0..p.blocks.len()).map(|b| p.dense_term(&c.terms, b)).collect()).collect()
}

/// `max_i |Σ_b tr(H_ib X_b) − b_i|`.
pub(crate) fn primal_residual(p: &SdpProblem, x: &[CMatrix]) -> f64 {
    let dense = dense_constraints(p);
    dense
        .iter()
        .zip(&p.constraints)
        .map(|(hs, c)| {
            let v: f64 = hs.iter().zip(x).map(|(h, xb)| linalg::trace_product(h, xb)).sum();
            (v - c.rhs).abs()
        })
        .fold(0.0, f64::max)
}

pub(crate) fn primal_objective(p: &SdpProblem, x: &[CMatrix]) -> f64 {
    match &p.objective {
        Some(o) => (0..p.blocks.len()).map(|b| linalg::trace_product(&p.dense_term(o, b), &x[b])).sum(),
        None => 0.0,
    }
}

/// `A*(y)` per block, built from dense constraint matrices.
pub(crate) fn adjoint(p: &SdpProblem, y: &[f64]) -> Vec<CMatrix> {
    let dense = dense_constraints(p);
    (0..p.blocks.len())
        .map(|b| {
            let n = p.blocks[b].dim;
            dense.iter().zip(y).fold(CMatrix::zeros(n, n), |acc, (hs, yi)| acc + hs[b].scale(*yi))
        })
        .collect()
}

/// Negative part of `λ_min(C − A*(y))` over blocks, relative to `1 + ‖C‖`.
pub(crate) fn dual_residual(p: &SdpProblem, y: &[f64]) -> f64 {
    let aty = adjoint(p, y);
    let mut worst = 0.0f64;
    let mut c_max = 0.0f64;
    for b in 0..p.blocks.len() {
        let c = match &p.objective {
            Some(o) => p.dense_term(o, b),
            None => CMatrix::zeros(p.blocks[b].dim, p.blocks[b].dim),
        };
        c_max = c_max.max(c.iter().fold(0.0f64, |a, v| a.max(v.norm())));
        worst = worst.max(-linalg::min_eigenvalue(&(c - &aty[b])));
    }
    worst.max(0.0) / (1.0 + c_max)
}

pub(crate) fn farkas(p: &SdpProblem, y: &[f64]) -> FarkasCertificate {
    let value: f64 = y.iter().zip(&p.constraints).map(|(a, c)| a * c.rhs).sum();
    let max_eigenvalue = adjoint(p, y).iter().map(linalg::max_eigenvalue).fold(f64::NEG_INFINITY, f64::max);
    FarkasCertificate { y: y.to_vec(), value, max_eigenvalue }
}

/// Recomputes every residual of `s` against `p` and flags contract
/// breaches. A `numerical_trouble` status is always a breach.
pub fn verify_certificate(p: &SdpProblem, s: &SdpSolution, tol: f64) -> CertificateReport {
    let mut r = CertificateReport { status: s.status, checks: Vec::new(), ok: true };
    let shapes_ok = s.block_values.len() == p.blocks.len()
        && s.block_values.iter().zip(&p.blocks).all(|(x, b)| x.nrows() == b.dim && x.ncols() == b.dim)
        && s.dual_values.len() == p.constraints.len();
    if !shapes_ok {
        r.push("solution shape matches problem", f64::INFINITY, 0.0);
        return r;
    }
    match s.status {
        SdpStatus::Optimal => {
            let b_scale = 1.0 + p.constraints.iter().fold(0.0f64, |a, c| a.max(c.rhs.abs()));
            r.push("primal residual", primal_residual(p, &s.block_values) / b_scale, tol);
            let neg = s.block_values.iter().map(|x| -linalg::min_eigenvalue(x)).fold(0.0f64, f64::max);
            r.push("primal PSD", neg, tol);
            r.push("hermitian blocks", s.block_values.iter().map(linalg::hermiticity_defect).fold(0.0, f64::max), tol);
            if p.objective.is_some() {
                r.push("dual PSD", dual_residual(p, &s.dual_values), tol);
                let pobj = primal_objective(p, &s.block_values);
                let dobj: f64 = s.dual_values.iter().zip(&p.constraints).map(|(a, c)| a * c.rhs).sum();
                let denom = 1.0 + pobj.abs() + dobj.abs();
                r.push("duality gap", (pobj - dobj).abs() / denom, tol);
                r.push("weak duality", (dobj - pobj) / denom, tol);
                r.push("reported objective", (pobj - s.primal_objective).abs() / denom, tol);
            }
        }
        SdpStatus::Infeasible => {
            let Some(cert) = &s.certificate else {
                r.push("infeasibility certificate attached", f64::INFINITY, 0.0);
                return r;
            };
            let fresh = farkas(p, &cert.y);
            let y_max = cert.y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            r.push("ray value b·y positive", -fresh.value, -tol);
            r.push("ray A*(y) ⪯ 0", fresh.max_eigenvalue, tol * (1.0 + y_max));
        }
        SdpStatus::NumericalTrouble => r.push("solver converged", f64::INFINITY, 0.0),
    }
    r
}

#[cfg(test)]
mod tests {
    use super::super::{solve, SdpProblem};
    use super::*;
    use crate::linalg::C64;

    #[test]
    fn corrupted_block_is_flagged() {
        let mut p = SdpProblem::new();
        let b = p.add_block("X", 2);
        p.add_constraint(&[(b, 0, 0, C64::from(1.0))], 1.0);
        p.add_constraint(&[(b, 1, 1, C64::from(1.0))], 1.0);
        p.set_objective(&[(b, 0, 0, C64::from(1.0)), (b, 1, 1, C64::from(1.0))]);
        let mut s = solve(&p, 1e-7).unwrap();
        assert!(verify_certificate(&p, &s, 1e-7).ok);
        s.block_values[0][(0, 0)] += C64::from(1e-3);
        let report = verify_certificate(&p, &s, 1e-7);
        assert!(!report.ok);
        assert!(report.breaches().iter().any(|c| c.name == "primal residual"));
    }

    #[test]
    fn tampered_ray_is_flagged() {
        let mut p = SdpProblem::new();
        let b = p.add_block("X", 2);
        p.add_constraint(&[(b, 0, 0, C64::from(1.0)), (b, 1, 1, C64::from(1.0))], -1.0);
        let mut s = solve(&p, 1e-7).unwrap();
        assert!(verify_certificate(&p, &s, 1e-7).ok);
        if let Some(c) = s.certificate.as_mut() {
            c.y[0] = 1.0;
        }
        assert!(!verify_certificate(&p, &s, 1e-7).ok);
    }
}
