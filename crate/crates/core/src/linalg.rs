//! Dense complex linear algebra shared by every other module.
//!
//! Operators are plain `nalgebra` matrices over `Complex<f64>`. Bipartite
//! vectors and operators use the row-major split `index = i_a * dim_b + i_b`,
//! so `kron(a, b)` acts as `a` on the first factor and `b` on the second.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Absolute tolerance on `‖h − h*‖_max` for an operator to count as Hermitian.
pub const TAU_HERM: f64 = 1e-8;
/// Most negative eigenvalue still accepted as positive semidefinite.
pub const TAU_PSD: f64 = 1e-8;
/// Default rank cutoff, relative to the largest eigenvalue / singular value.
pub const RANK_TOL: f64 = 1e-8;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Tensor split of a composite space `H_A ⊗ H_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteShape {
    pub dim_a: usize,
    pub dim_b: usize,
}

impl BipartiteShape {
    pub fn new(dim_a: usize, dim_b: usize) -> Self {
        Self { dim_a, dim_b }
    }

    pub fn total(&self) -> usize {
        self.dim_a * self.dim_b
    }
}

/// Which tensor factor a partial trace removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Spectral decomposition of a Hermitian operator with eigenvalues sorted
/// in descending order. Each eigenvector has its first non-negligible
/// component made real and positive, so results are reproducible.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..d {
            let v = self.values[k];
            scaled.column_mut(k).scale_mut(v);
        }
        &scaled * self.vectors.adjoint()
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Applies `f` to the spectrum and rebuilds `V f(Λ) V*`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for k in 0..self.values.len() {
            let v = f(self.values[k]);
            scaled.column_mut(k).scale_mut(v);
        }
        &scaled * self.vectors.adjoint()
    }
}

pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    if !h.is_square() {
        return f64::INFINITY;
    }
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(h: &CMatrix, tol: f64) -> bool {
    hermiticity_defect(h) <= tol
}

/// `(h + h*) / 2`.
pub fn hermitian_part(h: &CMatrix) -> CMatrix {
    (h + h.adjoint()).scale(0.5)
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Validation("matrix has non-finite entries".into()))
    }
}

/// Makes the first component of `v` with modulus above `1e-10·‖v‖` real
/// and positive.
pub fn phase_fix(v: &mut CVector) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-10 * norm).copied() {
        let phase = z.conj() / z.norm();
        v.scale_mut_complex(phase);
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, s: C64);
}

impl ScaleComplex for CVector {
    fn scale_mut_complex(&mut self, s: C64) {
        for z in self.iter_mut() {
            *z *= s;
        }
    }
}

fn phase_fix_columns(m: &mut CMatrix) {
    for k in 0..m.ncols() {
        let mut col: CVector = m.column(k).into_owned();
        phase_fix(&mut col);
        m.set_column(k, &col);
    }
}

pub fn hermitian_eig(h: &CMatrix) -> Result<Eigh> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(Error::Dimension(format!("eigendecomposition needs a non-empty square matrix, got {}x{}", h.nrows(), h.ncols())));
    }
    check_finite(h)?;
    let defect = hermiticity_defect(h);
    if defect > TAU_HERM {
        return Err(Error::Validation(format!("operator is not Hermitian (defect {defect:.3e})")));
    }
    Ok(eig_unchecked(&hermitian_part(h)))
}

/// Eigendecomposition without the Hermiticity check; the input is
/// symmetrized first.
pub(crate) fn eig_unchecked(h: &CMatrix) -> Eigh {
    let n = h.nrows();
    let eig = SymmetricEigen::new(hermitian_part(h));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    phase_fix_columns(&mut vectors);
    Eigh { values, vectors }
}

pub fn min_eigenvalue(h: &CMatrix) -> f64 {
    eig_unchecked(h).min()
}

pub fn max_eigenvalue(h: &CMatrix) -> f64 {
    eig_unchecked(h).max()
}

pub fn matrix_sqrt(p: &CMatrix) -> Result<CMatrix> {
    let e = hermitian_eig(p)?;
    if e.min() < -TAU_PSD {
        return Err(Error::Domain(format!("square root of an operator with negative eigenvalue {:.3e}", e.min())));
    }
    let floor = round_off_floor(&e);
    Ok(e.map(|x| if x > floor { x.sqrt() } else { 0.0 }))
}

/// Eigenvalues at or below this level are indistinguishable from zero in
/// double precision. Square roots amplify such noise, so it is clipped.
fn round_off_floor(e: &Eigh) -> f64 {
    let scale = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    16.0 * f64::EPSILON * scale * e.values.len() as f64
}

/// `p^{-1/2}` on the support of `p`, zero on its kernel. Eigenvalues at or
/// below `rank_tol · λ_max` count as kernel.
pub fn pinv_sqrt(p: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    let e = hermitian_eig(p)?;
    let cut = rank_tol * e.max().max(0.0);
    Ok(e.map(|x| if x > cut && x > 0.0 { 1.0 / x.sqrt() } else { 0.0 }))
}

/// `p^{-1/2}` for a full-rank positive operator. A spectrum touching the
/// cutoff is a hard error that names the smallest eigenvalue.
pub fn inv_sqrt(p: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    let e = hermitian_eig(p)?;
    let cut = rank_tol * e.max().max(0.0);
    if e.min() <= cut || e.min() <= 0.0 {
        return Err(Error::Domain(format!("operator is rank deficient: smallest eigenvalue {:.3e} (cutoff {:.3e})", e.min(), cut)));
    }
    Ok(e.map(|x| 1.0 / x.sqrt()))
}

/// Support projector of a PSD operator at `rank_tol`.
pub fn support_projector(p: &CMatrix, rank_tol: f64) -> CMatrix {
    let e = eig_unchecked(p);
    let cut = rank_tol * e.max().max(0.0);
    e.map(|x| if x > cut && x > 0.0 { 1.0 } else { 0.0 })
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

pub fn partial_trace(op: &CMatrix, shape: BipartiteShape, side: Side) -> Result<CMatrix> {
    let n = shape.total();
    if op.nrows() != n || op.ncols() != n {
        return Err(Error::Dimension(format!(
            "partial trace over {}x{} split needs a {n}x{n} operator, got {}x{}",
            shape.dim_a,
            shape.dim_b,
            op.nrows(),
            op.ncols()
        )));
    }
    let (da, db) = (shape.dim_a, shape.dim_b);
    Ok(match side {
        Side::A => CMatrix::from_fn(db, db, |b1, b2| (0..da).map(|a| op[(a * db + b1, a * db + b2)]).sum()),
        Side::B => CMatrix::from_fn(da, da, |a1, a2| (0..db).map(|b| op[(a1 * db + b, a2 * db + b)]).sum()),
    })
}

/// Reshapes `φ ∈ K ⊗ H` into the operator `F_φ : H → K` with
/// `⟨m|F_φ|k⟩ = ⟨m ⊗ k|φ⟩`. The shape is `(dim K, dim H)`.
pub fn vec_to_op(phi: &CVector, shape: BipartiteShape) -> Result<CMatrix> {
    if phi.len() != shape.total() {
        return Err(Error::Dimension(format!("vector of length {} does not split as {}x{}", phi.len(), shape.dim_a, shape.dim_b)));
    }
    Ok(CMatrix::from_fn(shape.dim_a, shape.dim_b, |m, k| phi[m * shape.dim_b + k]))
}

/// Inverse of [`vec_to_op`].
pub fn op_to_vec(f: &CMatrix) -> CVector {
    let (rows, cols) = f.shape();
    CVector::from_fn(rows * cols, |idx, _| f[(idx / cols, idx % cols)])
}

/// Singular value decomposition with singular values in descending order.
/// Left singular vectors are phase fixed, right vectors follow so that
/// `a = U diag(s) V*` still holds.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    pub fn rank(&self, rank_tol: f64) -> usize {
        let top = self.s.first().copied().unwrap_or(0.0);
        self.s.iter().filter(|&&x| x > rank_tol * top && x > 0.0).count()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.u.clone();
        for (k, &s) in self.s.iter().enumerate() {
            us.column_mut(k).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

pub fn svd(a: &CMatrix) -> Svd {
    let raw = a.clone().svd(true, true);
    let u = raw.u.expect("requested U");
    let v_t = raw.v_t.expect("requested V^T");
    let r = raw.singular_values.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&x, &y| raw.singular_values[y].partial_cmp(&raw.singular_values[x]).unwrap_or(std::cmp::Ordering::Equal));
    let mut uu = CMatrix::zeros(a.nrows(), r);
    let mut vv = CMatrix::zeros(a.ncols(), r);
    let v = v_t.adjoint();
    let mut s = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        let mut ucol: CVector = u.column(src).into_owned();
        let mut vcol: CVector = v.column(src).into_owned();
        let norm = ucol.norm();
        if let Some(z) = ucol.iter().find(|z| z.norm() > 1e-10 * norm).copied() {
            let phase = z.conj() / z.norm();
            ucol *= phase;
            vcol *= phase;
        }
        uu.set_column(dst, &ucol);
        vv.set_column(dst, &vcol);
        s.push(raw.singular_values[src]);
    }
    Svd { u: uu, s, v: vv }
}

pub fn rank(a: &CMatrix, rank_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    svd(a).rank(rank_tol)
}

/// `φ = Σ_i c_i u_i ⊗ v_i` with orthonormal columns `left`, `right`.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub left: CMatrix,
    pub right: CMatrix,
}

impl SchmidtDecomposition {
    pub fn reconstruct(&self) -> CVector {
        let da = self.left.nrows();
        let db = self.right.nrows();
        let mut out = CVector::zeros(da * db);
        for (k, &c) in self.coefficients.iter().enumerate() {
            let u: CVector = self.left.column(k).into_owned();
            let v: CVector = self.right.column(k).into_owned();
            out += kron_vec(&u, &v) * C64::from(c);
        }
        out
    }

    pub fn rank(&self, rank_tol: f64) -> usize {
        let top = self.coefficients.first().copied().unwrap_or(0.0);
        self.coefficients.iter().filter(|&&x| x > rank_tol * top && x > 0.0).count()
    }
}

pub fn schmidt_decompose(phi: &CVector, shape: BipartiteShape) -> Result<SchmidtDecomposition> {
    let f = vec_to_op(phi, shape)?;
    if phi.norm() == 0.0 {
        return Err(Error::Domain("Schmidt decomposition of the zero vector".into()));
    }
    let d = svd(&f);
    // F[a, b] = Σ s U[a,i] conj(V[b,i]) so the B-side vectors are conj(V).
    Ok(SchmidtDecomposition { coefficients: d.s, left: d.u, right: d.v.map(|z| z.conj()) })
}

/// Purification `Σ_k √a_k |e_k⟩ ⊗ |e_k⟩` in the eigenbasis of `sigma`
/// (descending eigenvalues, phase-fixed eigenvectors). Tracing out either
/// factor returns `sigma`.
pub fn purify(sigma: &CMatrix) -> Result<CVector> {
    let e = hermitian_eig(sigma)?;
    let d = sigma.nrows();
    let floor = round_off_floor(&e);
    let mut psi = CVector::zeros(d * d);
    for k in 0..d {
        let a = e.values[k];
        if a <= floor {
            continue;
        }
        let v: CVector = e.vectors.column(k).into_owned();
        psi += kron_vec(&v, &v) * C64::from(a.sqrt());
    }
    Ok(psi)
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Trace norm `‖a‖_1`, the sum of singular values.
pub fn trace_norm(a: &CMatrix) -> f64 {
    svd(a).s.iter().sum()
}

/// Normalized trace distance `½‖a − b‖_1`; orthogonal pure states are at
/// distance 1.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * trace_norm(&(a - b))
}

pub fn frob_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn real_trace(a: &CMatrix) -> f64 {
    a.trace().re
}

/// `Re tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// Transpose of `a` in the orthonormal basis formed by the columns of
/// `basis`: `U (U* a U)^T U*`.
pub fn transpose_in_basis(a: &CMatrix, basis: &CMatrix) -> CMatrix {
    let inner = basis.adjoint() * a * basis;
    basis * inner.transpose() * basis.adjoint()
}

/// Extends orthonormal columns to a full unitary by Gram–Schmidt against
/// the standard basis.
pub fn complete_basis(cols: &CMatrix) -> CMatrix {
    let d = cols.nrows();
    let mut basis: Vec<CVector> = (0..cols.ncols()).map(|k| cols.column(k).into_owned()).collect();
    for e in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = CVector::zeros(d);
        v[e] = ONE;
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&v);
                v -= b * overlap;
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v / C64::from(n));
        }
    }
    let mut out = CMatrix::zeros(d, d);
    for (k, b) in basis.iter().enumerate() {
        out.set_column(k, b);
    }
    out
}
