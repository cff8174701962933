//! Alternating projections for pure feasibility problems, used when the
//! interior-point method stalls without deciding.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{verify, SdpProblem};
use crate::linalg::{self, CMatrix};

fn project_psd(x: &CMatrix) -> CMatrix {
    let e = linalg::eig_unchecked(x);
    e.map(|v| v.max(0.0))
}

/// Alternates between the affine set `A(X) = b` and the PSD cone, starting
/// from `start`. Returns a point of the cone whose residual is within `tol`
/// (relative to `1 + max|b|`), or `None`.
pub(super) fn alternating(p: &SdpProblem, start: &[CMatrix], tol: f64) -> Option<Vec<CMatrix>> {
    let m = p.constraints.len();
    let nb = p.blocks.len();
    let dense: Vec<Vec<CMatrix>> = p.constraints.iter().map(|c| (0..nb).map(|b| p.dense_term(&c.terms, b)).collect()).collect();
    let gram = DMatrix::from_fn(m, m, |i, j| (0..nb).map(|b| linalg::trace_product(&dense[i][b], &dense[j][b])).sum::<f64>());
    let reg = 1e-12 * (1.0 + (0..m).fold(0.0f64, |a, i| a.max(gram[(i, i)])));
    let chol = Cholesky::new(gram + DMatrix::identity(m, m) * reg)?;
    let b_scale = 1.0 + p.constraints.iter().fold(0.0f64, |a, c| a.max(c.rhs.abs()));

    let mut x: Vec<CMatrix> = start.iter().map(project_psd).collect();
    for _ in 0..20_000 {
        let ax: Vec<f64> = dense.iter().map(|hs| hs.iter().zip(&x).map(|(h, xb)| linalg::trace_product(h, xb)).sum()).collect();
        let r = DVector::from_iterator(m, (0..m).map(|i| ax[i] - p.constraints[i].rhs));
        if r.amax() / b_scale <= 0.5 * tol {
            return Some(x);
        }
        let lam = chol.solve(&r);
        for b in 0..nb {
            let mut corr = CMatrix::zeros(p.blocks[b].dim, p.blocks[b].dim);
            for i in 0..m {
                corr += dense[i][b].scale(lam[i]);
            }
            x[b] = project_psd(&(&x[b] - corr));
        }
    }
    (verify::primal_residual(p, &x) / b_scale <= tol).then_some(x)
}
