use serde::{Deserialize, Serialize};

use super::{check_psd, DensityState, Validate, ValidationReport, TAU_NORM};
use crate::error::{Error, Result};
use crate::linalg::{self, BipartiteShape, CMatrix, CVector, Side, C64};

/// Channel `ρ ↦ Σ_i K_i ρ K_i*` with `K_i : C^{d_in} → C^{d_out}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausChannel {
    #[serde(with = "crate::json::matrices")]
    pub kraus_ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(kraus_ops: Vec<CMatrix>) -> Result<Self> {
        let c = Self { kraus_ops };
        c.validate().into_result()?;
        Ok(c)
    }

    pub fn identity(d: usize) -> Self {
        Self { kraus_ops: vec![linalg::identity(d)] }
    }

    /// `ρ ↦ tr(ρ) I/d`, with the `d²` Kraus operators `|i⟩⟨j|/√d`.
    pub fn completely_depolarizing(d: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        let mut ops = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut k = CMatrix::zeros(d, d);
                k[(i, j)] = C64::from(s);
                ops.push(k);
            }
        }
        Self { kraus_ops: ops }
    }

    pub fn d_in(&self) -> usize {
        self.kraus_ops.first().map_or(0, |k| k.ncols())
    }

    pub fn d_out(&self) -> usize {
        self.kraus_ops.first().map_or(0, |k| k.nrows())
    }

    pub fn max_kraus_rank(&self, rank_tol: f64) -> usize {
        self.kraus_ops.iter().map(|k| linalg::rank(k, rank_tol)).max().unwrap_or(0)
    }
}

impl Validate for KrausChannel {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new("kraus_channel");
        if self.kraus_ops.is_empty() {
            r.fail("at least one Kraus operator", "kraus_ops");
            return r;
        }
        let (dout, din) = (self.d_out(), self.d_in());
        if self.kraus_ops.iter().any(|k| k.nrows() != dout || k.ncols() != din) {
            r.fail("common shape", "kraus_ops");
            return r;
        }
        let s = self.kraus_ops.iter().fold(CMatrix::zeros(din, din), |acc, k| acc + k.adjoint() * k);
        r.check("trace preserving", "kraus_ops", linalg::max_abs_diff(&s, &linalg::identity(din)), TAU_NORM);
        r
    }
}

/// State-normalized Choi matrix `J = (Λ ⊗ id)|Φ⟩⟨Φ|` on `out ⊗ in` with
/// `|Φ⟩ = d_in^{-1/2} Σ_k |k⟩|k⟩`. It has unit trace and
/// `tr_out J = I/d_in`; the unnormalized convention is `d_in · J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiMatrix {
    #[serde(with = "crate::json::matrix")]
    pub matrix: CMatrix,
    /// `dim_a` is the output dimension, `dim_b` the input dimension.
    pub shape: BipartiteShape,
}

impl ChoiMatrix {
    pub fn new(matrix: CMatrix, shape: BipartiteShape) -> Result<Self> {
        let c = Self { matrix, shape };
        c.validate().into_result()?;
        Ok(c)
    }

    pub fn d_out(&self) -> usize {
        self.shape.dim_a
    }

    pub fn d_in(&self) -> usize {
        self.shape.dim_b
    }

    /// `Λ(ρ) = d_in · tr_in[(I ⊗ ρ^T) J]`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let (dout, din) = (self.d_out(), self.d_in());
        if rho.nrows() != din {
            return Err(Error::Dimension(format!("state of dimension {} for a channel on {din}", rho.nrows())));
        }
        let lifted = linalg::kron(&linalg::identity(dout), &rho.transpose());
        Ok(linalg::partial_trace(&(lifted * &self.matrix), self.shape, Side::B)?.scale(din as f64))
    }
}

impl Validate for ChoiMatrix {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new("choi_matrix");
        let n = self.shape.total();
        if self.matrix.nrows() != n || self.matrix.ncols() != n || n == 0 {
            r.fail("shape matches matrix", "shape");
            return r;
        }
        check_psd(&mut r, "matrix", &self.matrix);
        let din = self.d_in();
        match linalg::partial_trace(&self.matrix, self.shape, Side::A) {
            Ok(m) => {
                r.check("input marginal I/d_in", "matrix", linalg::max_abs_diff(&m, &linalg::identity(din).unscale(din as f64)), TAU_NORM)
            }
            Err(_) => r.fail("shape matches matrix", "shape"),
        }
        r
    }
}

/// A family of CP maps `E_λ` (each a list of Kraus operators) whose sum is
/// trace preserving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instrument {
    #[serde(with = "crate::json::matrices2")]
    pub branches: Vec<Vec<CMatrix>>,
    pub output_dim: usize,
}

impl Validate for Instrument {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new("instrument");
        let all: Vec<&CMatrix> = self.branches.iter().flatten().collect();
        let Some(first) = all.first() else {
            r.fail("at least one Kraus operator", "branches");
            return r;
        };
        let din = first.ncols();
        if all.iter().any(|k| k.ncols() != din || k.nrows() != self.output_dim) {
            r.fail("common shape", "branches");
            return r;
        }
        let s = all.iter().fold(CMatrix::zeros(din, din), |acc, k| acc + k.adjoint() * *k);
        r.check("trace preserving", "branches", linalg::max_abs_diff(&s, &linalg::identity(din)), TAU_NORM);
        r
    }
}

pub fn choi_of_channel(c: &KrausChannel) -> ChoiMatrix {
    let (dout, din) = (c.d_out(), c.d_in());
    let shape = BipartiteShape::new(dout, din);
    let mut j = CMatrix::zeros(dout * din, dout * din);
    let s = 1.0 / (din as f64).sqrt();
    for k in &c.kraus_ops {
        // (K ⊗ I)|Φ⟩ reshaped is K/√d_in.
        let v = linalg::op_to_vec(&k.scale(s));
        j += &v * v.adjoint();
    }
    ChoiMatrix { matrix: j, shape }
}

/// Kraus operators `K_i = √(d_in λ_i) F_{v_i}` from the eigendecomposition
/// `J = Σ λ_i |v_i⟩⟨v_i|`, one per eigenvalue above the rank cutoff.
pub fn kraus_of_choi(j: &ChoiMatrix, rank_tol: f64) -> Result<KrausChannel> {
    j.validate().into_result()?;
    let e = linalg::hermitian_eig(&j.matrix)?;
    let cut = rank_tol * e.max();
    let din = j.d_in() as f64;
    let mut ops = Vec::new();
    for (k, &lambda) in e.values.iter().enumerate() {
        if lambda <= cut || lambda <= 0.0 {
            break;
        }
        let v: CVector = e.vectors.column(k).into_owned();
        let f = linalg::vec_to_op(&v, j.shape)?;
        ops.push(f.scale((din * lambda).sqrt()));
    }
    Ok(KrausChannel { kraus_ops: ops })
}

pub fn apply_channel(c: &KrausChannel, rho: &DensityState) -> Result<DensityState> {
    if rho.dim() != c.d_in() {
        return Err(Error::Dimension(format!("state of dimension {} for a channel on {}", rho.dim(), c.d_in())));
    }
    let out = c.kraus_ops.iter().fold(CMatrix::zeros(c.d_out(), c.d_out()), |acc, k| acc + k * &rho.matrix * k.adjoint());
    Ok(DensityState { matrix: linalg::hermitian_part(&out) })
}

/// Heisenberg picture `A ↦ Σ_i K_i* A K_i`.
pub fn heisenberg_apply(c: &KrausChannel, a: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != c.d_out() || a.ncols() != c.d_out() {
        return Err(Error::Dimension(format!("observable of dimension {} for a channel into {}", a.nrows(), c.d_out())));
    }
    Ok(c.kraus_ops.iter().fold(CMatrix::zeros(c.d_in(), c.d_in()), |acc, k| acc + k.adjoint() * a * k))
}
