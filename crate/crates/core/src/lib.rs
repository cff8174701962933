//! Measurement compression, joint measurability and high-dimensional
//! steering on finite-dimensional Hilbert spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: dense complex primitives (eigendecompositions, partial
//!   traces, Schmidt decompositions, purifications).
//! * [`objects`]: validated states, POVMs, assemblages, channels and
//!   pointwise Kraus models.
//! * [`sdp`]: a small primal-dual interior-point solver with certificates.
//! * [`compat`]: joint measurability, LHS models and noise robustness.
//! * [`compress`]: n-simulation and n-preparation models and the
//!   converters between them.
//! * [`cv`]: binned position/momentum measurements on truncated oscillator
//!   spaces.
//! * [`cli`]: the logic behind the `povmc` binary.
//!
//! Continuous measures over Kraus operators or hidden variables are always
//! replaced by finite weight vectors. At finite dimension nothing is lost:
//! the relevant model sets are compact and convex, so finite mixtures
//! already reach every point.

pub mod cli;
pub mod compat;
pub mod compress;
pub mod cv;
pub mod error;
pub mod json;
pub mod linalg;
pub mod objects;
pub mod random;
pub mod sdp;

pub use error::{Error, Result};
