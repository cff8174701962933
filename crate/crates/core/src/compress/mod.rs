//! Compression of measurements into `n`-dimensional quantum memories.
//!
//! A measurement set is `n`-simulable when it factors through pointwise
//! Kraus operators of rank at most `n` followed by measurements on the
//! compressed system. Continuous measures over branches are replaced by
//! finite weight vectors, which loses nothing at finite dimension because
//! the set of simulable measurements is compact there.
//!
//! The exact equivalences are constructive and invertible:
//!
//! * rank-one simulations ⟷ parent POVMs ([`one_sim_from_jm`],
//!   [`jm_from_one_sim`]);
//! * simulations ⟷ preparations with Schmidt rank at most `n`, for a fixed
//!   full-rank total state ([`prep_to_sim`], [`sim_to_prep`]);
//! * Kraus operators of rank at most `n` ⟷ Choi decompositions with
//!   Schmidt rank at most `n` ([`kraus_to_choi_sn_witness`],
//!   [`peb_kraus_extraction`]).
//!
//! For `n ≥ 2` no exact test is known, so [`seesaw_n_prep`] searches for
//! models and only ever reports lower bounds on the achievable visibility.

mod choi;
mod preparation;
mod report;
mod seesaw;
mod simulation;

pub use choi::{kraus_to_choi_sn_witness, peb_kraus_extraction, KrausExtraction};
pub use preparation::{prep_to_sim, sim_to_prep, PreparationModel};
pub use report::{min_compression_dim, CompressionEntry, CompressionReport, EntryStatus};
pub use seesaw::{seesaw_n_prep, SeesawOptions, SeesawResult};
pub use simulation::{eval_simulation, jm_from_one_sim, one_sim_from_jm};
