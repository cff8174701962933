//! Infeasible-start primal-dual interior-point method.
//!
//! Works natively on complex Hermitian blocks with Nesterov–Todd scaling
//! and Mehrotra's predictor-corrector. Per block, with `X = L_x L_x*`,
//! `Z = L_z L_z*` and the SVD `L_z* L_x = U Λ V*`, the scaling
//! `R = L_x V Λ^{-1/2}` satisfies `R* Z R = R^{-1} X R^{-*} = Λ`, and
//! `W = R R*` is the NT point with `W Z W = X`. Search directions solve the
//! Schur system `M Δy = r` with `M_ij = Σ_b tr(H_ib W_b H_jb W_b)`.

#![allow(clippy::needless_range_loop)]

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{verify, SdpProblem, SdpSolution, SdpStatus, SolverOptions};
use crate::linalg::{self, CMatrix, C64};

type Sparse = Vec<(usize, usize, C64)>;

pub(super) struct Compiled {
    dims: Vec<usize>,
    /// Per constraint: `(block, Hermitian entries)`.
    cons: Vec<Vec<(usize, Sparse)>>,
    b: Vec<f64>,
    c: Vec<CMatrix>,
    /// Per block: `(constraint, term index)` sorted by constraint.
    block_cons: Vec<Vec<(usize, usize)>>,
}

impl Compiled {
    pub(super) fn new(p: &SdpProblem) -> Self {
        let dims: Vec<usize> = p.blocks.iter().map(|b| b.dim).collect();
        let cons = p
            .constraints
            .iter()
            .map(|c| c.terms.iter().map(|t| (t.block, t.entries.iter().map(|e| (e.row, e.col, e.value)).collect())).collect())
            .collect();
        let c = (0..dims.len())
            .map(|b| match &p.objective {
                Some(o) => p.dense_term(o, b),
                None => CMatrix::zeros(dims[b], dims[b]),
            })
            .collect();
        let b = p.constraints.iter().map(|c| c.rhs).collect();
        Self::finish(dims, cons, b, c)
    }

    /// `min Σ (s⁺_i + s⁻_i)` subject to `A(X) + s⁺ − s⁻ = b`, with the
    /// slacks as extra 1×1 blocks. Always strictly feasible; its dual is a
    /// Farkas ray bounded by `|y_i| ≤ 1`.
    pub(super) fn phase_one(p: &SdpProblem) -> Self {
        let base = Self::new(p);
        let m = base.b.len();
        let mut dims = base.dims.clone();
        let mut cons = base.cons.clone();
        let mut c: Vec<CMatrix> = base.dims.iter().map(|&n| CMatrix::zeros(n, n)).collect();
        for con in cons.iter_mut().take(m) {
            let plus = dims.len();
            dims.push(1);
            let minus = dims.len();
            dims.push(1);
            con.push((plus, vec![(0, 0, linalg::ONE)]));
            con.push((minus, vec![(0, 0, -linalg::ONE)]));
            c.push(CMatrix::from_element(1, 1, linalg::ONE));
            c.push(CMatrix::from_element(1, 1, linalg::ONE));
        }
        Self::finish(dims, cons, base.b, c)
    }

    fn finish(dims: Vec<usize>, cons: Vec<Vec<(usize, Sparse)>>, b: Vec<f64>, c: Vec<CMatrix>) -> Self {
        let mut block_cons = vec![Vec::new(); dims.len()];
        for (i, con) in cons.iter().enumerate() {
            for (t, (blk, _)) in con.iter().enumerate() {
                block_cons[*blk].push((i, t));
            }
        }
        Self { dims, cons, b, c, block_cons }
    }

    fn apply_a(&self, x: &[CMatrix]) -> Vec<f64> {
        self.cons
            .iter()
            .map(|con| {
                con.iter()
                    .map(|(blk, ents)| {
                        let xb = &x[*blk];
                        ents.iter().map(|&(p, q, v)| (v * xb[(q, p)]).re).sum::<f64>()
                    })
                    .sum()
            })
            .collect()
    }

    fn apply_at(&self, y: &[f64]) -> Vec<CMatrix> {
        (0..self.dims.len())
            .map(|blk| {
                let n = self.dims[blk];
                let mut out = CMatrix::zeros(n, n);
                for &(i, t) in &self.block_cons[blk] {
                    let yi = y[i];
                    if yi == 0.0 {
                        continue;
                    }
                    for &(p, q, v) in &self.cons[i][t].1 {
                        out[(p, q)] += v * yi;
                    }
                }
                out
            })
            .collect()
    }

    fn schur(&self, w: &[CMatrix]) -> DMatrix<f64> {
        let m = self.b.len();
        let mut mat = DMatrix::<f64>::zeros(m, m);
        for blk in 0..self.dims.len() {
            let n = self.dims[blk];
            let wb = &w[blk];
            let list = &self.block_cons[blk];
            for (jj, &(j, tj)) in list.iter().enumerate() {
                let mut t = CMatrix::zeros(n, n);
                for &(p, q, v) in &self.cons[j][tj].1 {
                    for r in 0..n {
                        t[(r, q)] += wb[(r, p)] * v;
                    }
                }
                let y = t * wb;
                for &(i, ti) in &list[..=jj] {
                    let val: f64 = self.cons[i][ti].1.iter().map(|&(p, q, v)| (v * y[(q, p)]).re).sum();
                    mat[(i, j)] += val;
                }
            }
        }
        for j in 0..m {
            for i in 0..j {
                mat[(j, i)] = mat[(i, j)];
            }
        }
        mat
    }

    pub(super) fn solution_from(&self, p: &SdpProblem, run: &Run, tol: f64) -> SdpSolution {
        let nb = p.blocks.len();
        let x: Vec<CMatrix> = run.x[..nb].to_vec();
        let y: Vec<f64> = run.y[..p.constraints.len()].to_vec();
        let b_scale = 1.0 + self.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let primal_residual = verify::primal_residual(p, &x) / b_scale;
        let dual_residual = verify::dual_residual(p, &y);
        let pobj = verify::primal_objective(p, &x);
        let dobj: f64 = y.iter().zip(&self.b).map(|(a, b)| a * b).sum();
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let ok = run.converged && primal_residual <= tol && dual_residual <= tol && gap <= tol;
        SdpSolution {
            status: if ok { SdpStatus::Optimal } else { SdpStatus::NumericalTrouble },
            block_values: x,
            dual_values: y,
            primal_objective: pobj,
            dual_objective: dobj,
            primal_residual,
            dual_residual,
            gap,
            iterations: run.iterations,
            certificate: None,
        }
    }
}

pub(super) struct Run {
    pub x: Vec<CMatrix>,
    pub y: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct Scaling {
    r: CMatrix,
    w: CMatrix,
    lambda: Vec<f64>,
}

fn nt_scaling(x: &CMatrix, z: &CMatrix) -> Option<Scaling> {
    let lx = Cholesky::new(x.clone())?.l();
    let lz = Cholesky::new(z.clone())?.l();
    let svd = (lz.adjoint() * &lx).svd(false, true);
    let v = svd.v_t?.adjoint();
    let lambda: Vec<f64> = svd.singular_values.iter().copied().collect();
    if lambda.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
        return None;
    }
    let mut r = lx * v;
    for (k, &l) in lambda.iter().enumerate() {
        let s = 1.0 / l.sqrt();
        r.column_mut(k).scale_mut(s);
    }
    let w = &r * r.adjoint();
    Some(Scaling { r, w, lambda })
}

/// Solves `Λ∘S = T`, i.e. `(ΛS + SΛ)/2 = T`.
fn lyap_diag(lambda: &[f64], t: &CMatrix) -> CMatrix {
    CMatrix::from_fn(t.nrows(), t.ncols(), |i, j| t[(i, j)] * (2.0 / (lambda[i] + lambda[j])))
}

/// Largest `α` with `Λ + α D ⪰ 0`, capped at a large number.
fn max_step(lambda: &[f64], d: &CMatrix) -> f64 {
    let inv: Vec<f64> = lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
    let b = CMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)] * (inv[i] * inv[j]));
    let lmin = linalg::min_eigenvalue(&b);
    if lmin >= 0.0 {
        1e6
    } else {
        -1.0 / lmin
    }
}

fn herm(m: &mut CMatrix) {
    *m = linalg::hermitian_part(m);
}

struct Direction {
    dx: Vec<CMatrix>,
    dz: Vec<CMatrix>,
    dy: Vec<f64>,
    dxt: Vec<CMatrix>,
    dzt: Vec<CMatrix>,
}

pub(super) fn run(pr: &Compiled, opts: SolverOptions) -> Run {
    let nb = pr.dims.len();
    let m = pr.b.len();
    let ntot: usize = pr.dims.iter().sum();

    let cons_norm: Vec<f64> =
        pr.cons.iter().map(|con| con.iter().flat_map(|(_, e)| e.iter().map(|&(_, _, v)| v.norm_sqr())).sum::<f64>().sqrt()).collect();
    let b_max = pr.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let c_max = pr.c.iter().flat_map(|c| c.iter()).fold(0.0f64, |a, v| a.max(v.norm()));

    let mut x: Vec<CMatrix> = Vec::with_capacity(nb);
    let mut z: Vec<CMatrix> = Vec::with_capacity(nb);
    for blk in 0..nb {
        let n = pr.dims[blk] as f64;
        let mut xi = 10f64.max(n.sqrt());
        let mut zeta = 10f64.max(n.sqrt()).max(pr.c[blk].norm());
        for &(i, _) in &pr.block_cons[blk] {
            xi = xi.max(n * (1.0 + pr.b[i].abs()) / (1.0 + cons_norm[i]));
            zeta = zeta.max(cons_norm[i]);
        }
        x.push(linalg::identity(pr.dims[blk]).scale(xi));
        z.push(linalg::identity(pr.dims[blk]).scale(zeta));
    }
    let mut y = vec![0.0; m];
    let target = 0.1 * opts.tol;
    let mut good_enough = false;

    for iter in 0..opts.max_iterations {
        let ax = pr.apply_a(&x);
        let rp: Vec<f64> = pr.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = pr.apply_at(&y);
        let rd: Vec<CMatrix> = (0..nb).map(|k| &pr.c[k] - &z[k] - &aty[k]).collect();
        let pobj: f64 = (0..nb).map(|k| linalg::trace_product(&pr.c[k], &x[k])).sum();
        let dobj: f64 = y.iter().zip(&pr.b).map(|(a, b)| a * b).sum();
        let xz: f64 = (0..nb).map(|k| linalg::trace_product(&x[k], &z[k])).sum();
        let mu = xz / ntot as f64;

        let pinf = rp.iter().fold(0.0f64, |a, v| a.max(v.abs())) / (1.0 + b_max);
        let dinf = rd.iter().flat_map(|r| r.iter()).fold(0.0f64, |a, v| a.max(v.norm())) / (1.0 + c_max);
        let gap = (pobj - dobj).abs().max(xz) / (1.0 + pobj.abs() + dobj.abs());
        if !(pinf.is_finite() && dinf.is_finite() && gap.is_finite()) {
            return Run { x, y, iterations: iter, converged: false };
        }
        good_enough = pinf <= opts.tol && dinf <= opts.tol && gap <= opts.tol;
        if pinf <= target && dinf <= target && gap <= target {
            return Run { x, y, iterations: iter, converged: true };
        }
        let blowup = x.iter().chain(&z).fold(0.0f64, |a, v| a.max(v.norm())).max(y.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        if blowup > 1e12 {
            return Run { x, y, iterations: iter, converged: false };
        }

        let mut scal = Vec::with_capacity(nb);
        for k in 0..nb {
            match nt_scaling(&x[k], &z[k]) {
                Some(s) => scal.push(s),
                None => return Run { x, y, iterations: iter, converged: good_enough },
            }
        }
        let w: Vec<CMatrix> = scal.iter().map(|s| s.w.clone()).collect();
        let mut schur = pr.schur(&w);
        let diag_max = (0..m).fold(0.0f64, |a, i| a.max(schur[(i, i)].abs()));
        let mut chol = None;
        let mut reg = 0.0;
        for attempt in 0..6 {
            if let Some(c) = Cholesky::new(schur.clone()) {
                chol = Some(c);
                break;
            }
            let next = (1.0 + diag_max) * 1e-14 * 100f64.powi(attempt);
            for i in 0..m {
                schur[(i, i)] += next - reg;
            }
            reg = next;
        }
        let Some(chol) = chol else {
            return Run { x, y, iterations: iter, converged: good_enough };
        };

        let wrdw: Vec<CMatrix> = (0..nb).map(|k| &w[k] * &rd[k] * &w[k]).collect();
        let a_wrdw = pr.apply_a(&wrdw);

        let direction = |s: &[CMatrix]| -> Direction {
            let rsr: Vec<CMatrix> = (0..nb).map(|k| &scal[k].r * &s[k] * scal[k].r.adjoint()).collect();
            let a_rsr = pr.apply_a(&rsr);
            let rhs = DVector::from_iterator(m, (0..m).map(|i| rp[i] - a_rsr[i] + a_wrdw[i]));
            let dy = chol.solve(&rhs);
            let dy: Vec<f64> = dy.iter().copied().collect();
            let at_dy = pr.apply_at(&dy);
            let mut dx = Vec::with_capacity(nb);
            let mut dz = Vec::with_capacity(nb);
            let mut dxt = Vec::with_capacity(nb);
            let mut dzt = Vec::with_capacity(nb);
            for k in 0..nb {
                let mut dzk = &rd[k] - &at_dy[k];
                herm(&mut dzk);
                let mut dxk = &rsr[k] - &w[k] * &dzk * &w[k];
                herm(&mut dxk);
                let mut dztk = scal[k].r.adjoint() * &dzk * &scal[k].r;
                herm(&mut dztk);
                let mut dxtk = &s[k] - &dztk;
                herm(&mut dxtk);
                dx.push(dxk);
                dz.push(dzk);
                dxt.push(dxtk);
                dzt.push(dztk);
            }
            Direction { dx, dz, dy, dxt, dzt }
        };

        let steps = |d: &Direction| -> (f64, f64) {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for k in 0..nb {
                ap = ap.min(max_step(&scal[k].lambda, &d.dxt[k]));
                ad = ad.min(max_step(&scal[k].lambda, &d.dzt[k]));
            }
            (ap, ad)
        };

        // Predictor: T = −Λ².
        let s_aff: Vec<CMatrix> = scal
            .iter()
            .map(|s| CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(s.lambda.len(), s.lambda.iter().map(|l| C64::from(-l)))))
            .collect();
        let aff = direction(&s_aff);
        let (ap_max, ad_max) = steps(&aff);
        let ap = ap_max.min(1.0);
        let ad = ad_max.min(1.0);
        let mut xz_aff = 0.0;
        for k in 0..nb {
            let lam = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                scal[k].lambda.len(),
                scal[k].lambda.iter().map(|l| C64::from(*l)),
            ));
            let xa = &lam + aff.dxt[k].scale(ap);
            let za = &lam + aff.dzt[k].scale(ad);
            xz_aff += linalg::trace_product(&xa, &za);
        }
        let mu_aff = xz_aff / ntot as f64;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

        // Corrector: T = σμI − Λ² − (ΔX̃ΔZ̃ + ΔZ̃ΔX̃)/2.
        let s_cor: Vec<CMatrix> = (0..nb)
            .map(|k| {
                let lam = &scal[k].lambda;
                let n = lam.len();
                let prod = &aff.dxt[k] * &aff.dzt[k];
                let sym = (&prod + prod.adjoint()).scale(0.5);
                let mut t = -sym;
                for i in 0..n {
                    t[(i, i)] += C64::from(sigma * mu - lam[i] * lam[i]);
                }
                lyap_diag(lam, &t)
            })
            .collect();
        let dir = direction(&s_cor);
        let (ap_max, ad_max) = steps(&dir);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap = (gamma * ap_max).min(1.0);
        let ad = (gamma * ad_max).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            return Run { x, y, iterations: iter, converged: good_enough };
        }

        for k in 0..nb {
            x[k] += dir.dx[k].scale(ap);
            herm(&mut x[k]);
            z[k] += dir.dz[k].scale(ad);
            herm(&mut z[k]);
        }
        for i in 0..m {
            y[i] += ad * dir.dy[i];
        }
    }
    Run { x, y, iterations: opts.max_iterations, converged: good_enough }
}
