//! Multipartite quantum coherence under the square-root quantum
//! Jensen-Shannon distance.
//!
//! The total coherence of a state is its distance to the closest incoherent
//! state in a fixed product basis. It splits into an intrinsic part (distance
//! to the closest separable state, with free local bases) and a local part
//! (distance between the two minimizers). [`coherence`] assembles these,
//! together with per-site, pairwise and bipartition coherences and the
//! monogamy score, into a [`CoherenceReport`].
//!
//! Sites are indexed from 0 and site 0 is the most significant tensor
//! factor. Entropies use base-2 logarithms, so `0 ≤ J ≤ 1`.

pub mod coherence;
pub mod error;
pub mod factory;
pub mod io;
pub mod linalg;
pub mod metric;
pub mod minimize;
pub mod models;
pub mod optim;
pub mod state;

pub use coherence::{
    decomposition_report, intrinsic_coherence, local_coherence, monogamy, pairwise_intrinsic,
    site_coherence, total_coherence, CoherenceReport, Outputs,
};
pub use error::{Error, Result};
pub use factory::{
    bell_state, ghz_state, product_minus_state, w_state, werner_ghz, BasisSpec, BellSign,
};
pub use metric::{qjsd, qjsd_distance, vn_entropy};
pub use minimize::{
    closest_incoherent, closest_separable, MinimizationResult, OptimOptions, SeparableAnsatz,
};
pub use models::{ground_state, Boundary, GroundStateResult, ModelSpec};
pub use state::QuantumState;
