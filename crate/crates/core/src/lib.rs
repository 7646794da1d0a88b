//! Geodesic blocking on Riemannian two-tori of revolution.
//!
//! The torus is `T² = ℝ²/ℤ²` with the metric `ds² = f²(y) dx² + dy²` for a
//! positive 1-periodic profile `f`. The crate integrates geodesics and their
//! Jacobi fields, solves joining problems per lift in the universal cover,
//! finds minimal closed geodesics by curve shortening, and assembles the
//! blocking/insecurity evidence built on top of those pieces.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled.
//! The `parallel` feature fans angle sweeps and curve-shortening seeds out
//! over rayon; results are merged in input order either way.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod asymptotics;
pub mod connect;
mod error;
pub mod flow;
pub mod metric;
pub mod ode;
mod par;
pub mod security;

pub use error::{Error, Result};
pub use metric::{CoverPoint, MetricProfile, ProfileKind, TorusPoint};
