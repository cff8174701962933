use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::hermite::hermite_all;
use super::quadrature::integrate;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::objects::{MeasurementSet, Povm};

/// Completeness defect tolerated before renormalization.
const COMPLETENESS_TOL: f64 = 1e-7;

/// Fock truncation and binning of the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub fock_dim: usize,
    /// Strictly increasing, starting at `-∞` and ending at `+∞`.
    pub bin_edges: Vec<f64>,
    pub quadrature_tol: f64,
}

impl TruncationConfig {
    /// Bins bounded by the given finite interior edges plus the two
    /// infinite tails.
    pub fn from_interior(fock_dim: usize, interior: &[f64], quadrature_tol: f64) -> Result<Self> {
        let mut bin_edges = Vec::with_capacity(interior.len() + 2);
        bin_edges.push(f64::NEG_INFINITY);
        bin_edges.extend_from_slice(interior);
        bin_edges.push(f64::INFINITY);
        let cfg = Self { fock_dim, bin_edges, quadrature_tol };
        cfg.check()?;
        Ok(cfg)
    }

    /// Eight bins of equal `|ψ_0|²` mass.
    pub fn default_for(fock_dim: usize) -> Self {
        Self::from_interior(fock_dim, &default_interior_edges(8), 1e-10).expect("default edges are valid")
    }

    pub fn bins(&self) -> usize {
        self.bin_edges.len().saturating_sub(1)
    }

    /// The finite edges.
    pub fn interior(&self) -> &[f64] {
        &self.bin_edges[1..self.bin_edges.len() - 1]
    }

    pub fn check(&self) -> Result<()> {
        if self.fock_dim == 0 {
            return Err(Error::Validation("fock_dim must be at least 1".into()));
        }
        let e = &self.bin_edges;
        if e.len() < 2 || e[0] != f64::NEG_INFINITY || e[e.len() - 1] != f64::INFINITY {
            return Err(Error::Validation("bin edges must start at -inf and end at +inf".into()));
        }
        if e[1..e.len() - 1].iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("interior bin edges must be finite".into()));
        }
        if e.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("bin edges must be strictly increasing".into()));
        }
        if self.quadrature_tol.is_nan() || self.quadrature_tol <= 0.0 {
            return Err(Error::Validation("quadrature_tol must be positive".into()));
        }
        Ok(())
    }

    /// Integration cutoff: `ψ_k` for `k < d` is negligible beyond it.
    fn cutoff(&self) -> f64 {
        (2.0 * self.fock_dim as f64).sqrt() + 8.0
    }
}

/// Interior edges splitting `|ψ_0(x)|² = e^{-x²}/√π` into `bins` equal
/// masses: `Φ^{-1}(k / bins) / √2`.
pub fn default_interior_edges(bins: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (1..bins).map(|k| normal.inverse_cdf(k as f64 / bins as f64) / std::f64::consts::SQRT_2).collect()
}

/// One effect per bin, in the Fock basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedQuadraturePovm {
    #[serde(with = "crate::json::matrices")]
    pub effects: Vec<CMatrix>,
}

impl BinnedQuadraturePovm {
    pub fn povm(&self) -> Result<Povm> {
        Povm::new(self.effects.clone())
    }
}

/// Real symmetric `∫_bin ψ_j ψ_k` for every bin, with tails clipped at the
/// cutoff.
fn position_blocks(cfg: &TruncationConfig) -> Result<Vec<Vec<f64>>> {
    cfg.check()?;
    let d = cfg.fock_dim;
    let cut = cfg.cutoff();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| (j..d).map(move |k| (j, k))).collect();
    let integrand = |x: f64| {
        let h = hermite_all(d, x);
        pairs.iter().map(|&(j, k)| h[j] * h[k]).collect::<Vec<f64>>()
    };
    let mut out = Vec::with_capacity(cfg.bins());
    for w in cfg.bin_edges.windows(2) {
        let (lo, hi) = (w[0].max(-cut), w[1].min(cut));
        let upper = if lo < hi { integrate(integrand, lo, hi, cfg.quadrature_tol)? } else { vec![0.0; pairs.len()] };
        let mut m = vec![0.0; d * d];
        for (&(j, k), v) in pairs.iter().zip(upper) {
            m[j * d + k] = v;
            m[k * d + j] = v;
        }
        out.push(m);
    }
    Ok(out)
}

/// Checks completeness within [`COMPLETENESS_TOL`], then removes the
/// residual quadrature error exactly with `E ↦ S^{-1/2} E S^{-1/2}`.
fn finish(effects: Vec<CMatrix>) -> Result<BinnedQuadraturePovm> {
    let d = effects[0].nrows();
    let sum = effects.iter().fold(CMatrix::zeros(d, d), |acc, e| acc + e);
    let defect = linalg::max_abs_diff(&sum, &linalg::identity(d));
    if defect > COMPLETENESS_TOL {
        return Err(Error::Domain(format!("binned effects miss completeness by {defect:.3e}")));
    }
    let s = linalg::inv_sqrt(&sum, linalg::RANK_TOL)?;
    let effects = effects.iter().map(|e| linalg::hermitian_part(&(&s * e * &s))).collect();
    let p = BinnedQuadraturePovm { effects };
    p.povm()?;
    Ok(p)
}

/// `⟨j|Q(X)|k⟩ = ∫_X ψ_j ψ_k` for each bin `X`.
pub fn binned_position_povm(cfg: &TruncationConfig) -> Result<BinnedQuadraturePovm> {
    let d = cfg.fock_dim;
    let effects = position_blocks(cfg)?.into_iter().map(|m| CMatrix::from_fn(d, d, |j, k| C64::from(m[j * d + k]))).collect();
    finish(effects)
}

/// `P(X) = F* Q(X) F` with the Fourier transform acting as `F ψ_k = (−i)^k ψ_k`,
/// so `⟨j|P(X)|k⟩ = i^{j−k} ⟨j|Q(X)|k⟩`.
pub fn binned_momentum_povm(cfg: &TruncationConfig) -> Result<BinnedQuadraturePovm> {
    let d = cfg.fock_dim;
    let phase = |j: usize, k: usize| linalg::I.powi(((j + 4 * d - k) % 4) as i32);
    let effects = position_blocks(cfg)?.into_iter().map(|m| CMatrix::from_fn(d, d, |j, k| phase(j, k) * m[j * d + k])).collect();
    finish(effects)
}

/// The two-setting set `{Q-binned, P-binned}`.
pub fn quadrature_pair(cfg: &TruncationConfig) -> Result<MeasurementSet> {
    MeasurementSet::new(vec![binned_position_povm(cfg)?.povm()?, binned_momentum_povm(cfg)?.povm()?])
}
