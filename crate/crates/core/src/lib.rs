//! Prototype selection and k-medoids clustering.
//!
//! Given a source set `S`, a weighted target set `T` and a dissimilarity
//! `d: T × S → [0, 1]`, pick `k` source points maximizing
//! `f(M) = Σ_j q_j max_{i ∈ M} (1 − d(j, i))`.
//!
//! Three selection algorithms are provided:
//!
//! * [`exact::build`]: greedy BUILD of a PAM generalized to `S ≠ T`, with
//!   [`exact::swap`] refinement.
//! * [`exact::spot_greedy`]: greedy maximization of `f` through explicit
//!   marginal gains. It selects the same prototypes as `build`.
//! * [`protobandit::protobandit`]: stochastic-greedy candidate subsets plus
//!   best-arm identification on sampled targets. Its query count does not
//!   depend on `|T|`.
//!
//! Every dissimilarity evaluation goes through a [`metric::DissimilarityProvider`]
//! which counts them exactly.

pub mod bandit;
pub mod dataset;
mod error;
pub mod eval;
pub mod exact;
pub mod metric;
pub mod protobandit;
mod select;
mod state;

pub use error::{Error, Result};
pub use state::PrototypeState;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random generator used by every seeded routine in the crate.
pub type SeedRng = ChaCha8Rng;

pub(crate) fn seeded(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}
