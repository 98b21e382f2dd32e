//! Exact-arithmetic laboratory for piecewise ±1/β-affine contractions of the
//! unit interval and the three-tank switched server system whose Poincaré
//! map they describe.
//!
//! * [`exactnum`]: rationals, digit streams, exact comparison.
//! * [`contraction`]: the maps themselves, orbits, cycle detection.
//! * [`betadyn`]: β-transformations, the integers ℓ and ℓ′, factor censuses.
//! * [`quasipart`]: backward closures, invariant quasi-partitions, attractor supersets.
//! * [`serversim`]: the fluid model, its Poincaré map and the conjugacy to the interval map.
//! * [`numspec`]: text grammar for numbers and maps used by the CLI.
//! * [`suites`]: seeded property suites shared by the CLI `verify` command.

pub mod betadyn;
pub mod contraction;
mod error;
pub mod exactnum;
pub mod numspec;
pub mod quasipart;
pub mod serversim;
pub mod suites;

pub use error::{Error, Result};
