//! Deterministic upper and lower bounds on marginal likelihoods in
//! two-layer sigmoid and noisy-OR belief networks.
//!
//! The crate provides:
//!
//! * [`Network`]: a validated directed belief network over binary nodes,
//!   with sigmoid or noisy-OR conditionals, JSON (de)serialization, joint
//!   probabilities and ancestral sampling;
//! * [`transforms`]: the scalar variational envelopes everything is built
//!   from, each paired with its closed-form optimal parameter;
//! * [`exact`]: enumeration-based reference answers (marginals,
//!   posteriors, KL divergences, coupling summaries), capped so they fail
//!   loudly instead of running forever;
//! * [`upper`] / [`lower`]: optimized variational bounds on
//!   `log P(evidence)`. Every iterate of either optimizer is a valid
//!   bound, so results are rigorous even before convergence (up to the
//!   truncation caveat documented in [`lower`]).
//!
//! All numerics are generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`); the `*64`/`*32` aliases below pick a
//! width without spelling out type parameters.

pub mod error;
pub mod exact;
pub mod io;
pub mod math;
pub mod network;
mod opt1d;
pub mod scalar;
pub mod transforms;

pub mod lower;
pub mod upper;

pub use error::{Error, Result};
pub use exact::{MarginalResult, SigmaStdMode, DEFAULT_ENUM_CAP};
pub use lower::{
    lower_bound, lower_bound_eval, LowerBoundOpts, LowerBoundResult,
    SigmoidExpectation, MU_CLAMP,
};
pub use network::{Edge, Evidence, Layers, Network, NetworkKind, NodeId, State};
pub use scalar::Real;
pub use transforms::QuadCoeffs;
pub use upper::{upper_bound, upper_bound_eval, OptimizeOpts, UpperBoundResult};

/// Double-precision network.
pub type Network64 = Network<f64>;
/// Single-precision network.
pub type Network32 = Network<f32>;
/// Double-precision edge.
pub type Edge64 = Edge<f64>;
/// Double-precision upper-bound options.
pub type OptimizeOpts64 = OptimizeOpts<f64>;
/// Double-precision lower-bound options.
pub type LowerBoundOpts64 = LowerBoundOpts<f64>;
/// Double-precision upper-bound result.
pub type UpperBoundResult64 = UpperBoundResult<f64>;
/// Double-precision lower-bound result.
pub type LowerBoundResult64 = LowerBoundResult<f64>;
