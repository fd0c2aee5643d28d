//! Simulation and numerics for spatial Lambda-Fleming-Viot (SLFV) models in which
//! reproduction events draw a parent from one ball and replace mass in another,
//! with heavy-tailed event radii.
//!
//! The crate has three layers:
//! - closed-form and quadrature building blocks ([`geometry`], [`kernels`]),
//! - parameter bookkeeping for the heavy-tailed scaling regimes ([`regimes`]),
//! - event-driven Monte Carlo for the ancestral pair process ([`dual`]) and the
//!   forward-in-time allele field on a torus ([`forward`]).
//!
//! The [`cli`] module wires these into the `slfv` binary.

// reference values keep every digit they were computed with
#![allow(clippy::excessive_precision)]
// guards written as !(x >= lo) reject NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dual;
mod error;
pub mod forward;
pub mod geometry;
pub mod kernels;
pub mod regimes;
pub mod rng;

pub use error::{Error, Result};
