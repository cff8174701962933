//! Binned position and momentum measurements on a truncated oscillator.
//!
//! The Fock space is cut to `span{ψ_0, …, ψ_{d−1}}` and each spectral
//! projection `χ_X(x)` of the position operator is compressed to that span.
//! The momentum effects follow from the Fourier transform, which is diagonal
//! in the Fock basis. Everything here is a finite-dimensional probe: the
//! numbers say nothing rigorous about the untruncated pair.

mod hermite;
mod povm;
mod quadrature;
mod scan;

pub use hermite::{hermite_all, hermite_wavefunction};
pub use povm::{
    binned_momentum_povm, binned_position_povm, default_interior_edges, quadrature_pair, BinnedQuadraturePovm, TruncationConfig,
};
pub use quadrature::integrate;
pub use scan::{incompressibility_scan, CellStatus, ScanConfig, ScanRow, ScanTable, SigmaChoice};
