//! Two-round EM for mixtures of spherical Gaussians.
//!
//! The crate is `no_std` (it needs `alloc`) and free of I/O. It provides:
//!
//! - [`mixture`]: spherical mixture models, seeded sampling, log densities and
//!   the c-separation metric.
//! - [`em`]: E-step, the two M-step variants (common and per-center variance)
//!   and an iterated vanilla EM baseline.
//! - [`two_round`]: the two-round procedure: random seeding with `l > k`
//!   centers, one EM round, starvation pruning plus farthest-first selection,
//!   and one final EM round.
//! - [`diagnostics`]: Monte-Carlo checks of the concentration and accuracy
//!   guarantees, center matching, and the fractional-to-binary label rounding
//!   procedure used as a test oracle.
//!
//! # Determinism
//!
//! All randomness comes from [`rng::child_seed`] and [`rng::Rng`] (ChaCha8
//! with a Marsaglia polar normal sampler built on the pure-Rust `libm`). Every
//! reduction runs single-threaded in a fixed order (point-major, then
//! center), so results are bit-reproducible for a given seed on any target.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod em;
mod error;
pub mod math;
pub mod mixture;
pub mod recipe;
pub mod rng;
pub mod two_round;

pub use em::{EmState, Responsibilities, VarianceMode, Variances};
pub use error::{Error, Result};
pub use mixture::{Component, Dataset, MixtureModel, Points, SeparationReport};
pub use recipe::{Layout, MixtureRecipe};
pub use two_round::{TwoRoundConfig, TwoRoundResult};
