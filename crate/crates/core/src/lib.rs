//! Isolating several nodes of a random recursive tree by repeatedly cutting
//! uniformly random edges.
//!
//! Three independent routes compute the law of the number of cuts:
//!
//! * [`cutter`] / [`montecarlo`] simulate the process itself,
//! * [`exactdist`] runs the exact distributional recurrences driven by the
//!   splitting laws of [`splitprob`],
//! * [`series`] realises the bivariate generating functions over exact
//!   rationals and checks their differential equations.
//!
//! [`asymptotics`] holds the beta and stable limit targets.

#![allow(clippy::needless_range_loop)]

pub mod asymptotics;
pub mod cli;
pub mod cutter;
pub mod error;
pub mod exactdist;
pub mod montecarlo;
pub mod numeric;
pub mod series;
pub mod splitprob;
pub mod tree;

pub use error::{Error, Result};
