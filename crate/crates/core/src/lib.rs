//! Numerical laboratory for the quartic generalized Korteweg-de Vries
//! equation posed on the right half line:
//!
//! ```text
//!     u_t + u_xxx + (u^4)_x = 0,        x > 0, t > 0,
//!     u(x, 0) = u0(x),                  u(0, t) = g(t).
//! ```
//!
//! The crate provides the building blocks of a Duhamel/contraction solver for
//! this initial-boundary value problem and the instrumentation needed to test
//! the dispersive estimates it rests on: periodic spectral grids, the Airy
//! group, a boundary-forcing integral operator, Bourgain-type norms, smooth
//! cutoffs, half-line extension operators, and ensemble drivers that measure
//! estimate ratios on random data.
//!
//! Everything is deterministic: random data flows through seeded ChaCha
//! generators and all parallel reductions preserve order.

pub mod cutoff;
pub mod duhamel;
pub mod error;
pub mod estimates;
pub mod extension;
pub mod grid;
pub mod io;
pub mod linear;
pub mod norms;
pub mod presets;
pub mod spectral;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use grid::{GridFunction, SpaceTimeField, SpatialGrid, TimeGrid};
