//! Stationary queue-length analysis of a two-station tandem queue with
//! coupled processors subject to global breakdowns.
//!
//! The network alternates between an operating mode (jobs arrive at rate
//! `lambda0`, both stations share one unit of capacity in proportions
//! `p : 1-p`) and a setup mode entered at rate `gamma` (no service, arrivals
//! at rate `lambda1`, repair at rate `tau`). The joint queue-length process
//! is a Markov-modulated random walk in the quarter plane.
//!
//! Four mutually cross-checking solution routes are provided:
//!
//! - [`psa`]: power-series expansion of the generating functions in the
//!   coupling parameter `p`, with coefficient functions evaluated as
//!   truncated Taylor jets ([`jets`]).
//! - [`bvp`]: Riemann-Hilbert boundary-value solution on the kernel contour,
//!   using a Theodorsen-type numerical conformal map.
//! - [`closedform`]: explicit generating functions at the endpoints `p = 0`
//!   and `p = 1` (preemptive priority regimes).
//! - [`oracle`]: truncated-CTMC stationary solver and a discrete-event
//!   simulator, used as ground truth.

pub mod bvp;
pub mod closedform;
pub mod error;
pub mod jets;
pub mod kernel;
pub mod model;
pub mod oracle;
pub mod psa;
pub(crate) mod roots;

pub use error::CoreError;
pub use model::{LoadProfile, ModelParams};
pub use oracle::{SimEstimates, StationaryTable, TruncatedChain};

/// Convenience alias used throughout the crate.
pub type C64 = num_complex::Complex64;
