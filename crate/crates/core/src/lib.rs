//! Online load balancing under ℓ_p norms.
//!
//! Jobs arrive one at a time; each job is an `m x k` matrix of load options
//! with entries in `[0,1]` and the algorithm must commit to one column before
//! seeing the next job. The goal is to keep the ℓ_p norm of the accumulated
//! machine loads small, both against adversarial orders (competitive ratio)
//! and uniformly random orders (expected load against the offline optimum).
//!
//! The crate provides:
//!
//! - [`smoothing`]: the ℓ_p norm, a smoothed companion with `e^{±eps}`-stable
//!   gradients, and the linearization estimates the analyses rest on.
//! - [`olo`]: the online linear optimization game over the nonnegative ℓ_q
//!   ball and the gradient player with `(eps, R)`-regret.
//! - [`balancing`]: the four online algorithms — `greedy`, `greedy_wr`
//!   (restart at the midpoint), `smooth_greedy` (greedy on the smoothed norm,
//!   with restart), and `ultimate` (greedy until the load passes the
//!   smoothing radius, then `smooth_greedy`).
//! - [`instances`]: constructive instance families, including the adaptive
//!   pairing adversary and the Walsh-system random-order lower bound, plus a
//!   JSON instance file format.
//! - [`offline`]: exact brute-force optimum and a certified fractional lower
//!   bound via conditional gradient.
//! - [`harness`]: seeded experiment engine, Monte-Carlo validators for the
//!   sampling-without-replacement inequalities, and CSV/JSON report output.

pub mod balancing;
pub mod error;
pub mod harness;
pub mod instances;
pub mod offline;
pub mod olo;
pub mod smoothing;

pub use error::{Error, Result};
