//! Numerical core for Lyapunov exponents of a simple random walk in an
//! i.i.d. random potential.
//!
//! The crate is `no_std` with `alloc`. Parallel execution, file formats and
//! the command line live in the `rwrp` companion crate.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod coarse;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod field;
pub mod perco;
pub mod potential;
pub mod quad;
pub mod rng;
pub mod site;
pub mod walk;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use field::{Environment, EnvironmentField, PlantedEnvironment};
pub use potential::PotentialDistribution;
pub use site::{Site, SiteBox, MAX_DIM};
