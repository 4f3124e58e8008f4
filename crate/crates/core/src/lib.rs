//! Beam outage probability and beam outage capacity of opportunistic
//! beamforming in a cell whose users form a Poisson point process.
//!
//! The analytic side ([`outage`], [`capacity`]) evaluates the outage CDF of the
//! best user's SINR on a beam and inverts it for the outage capacity. The
//! [`sim`] module is an independent Monte Carlo model of the same network used
//! to validate those formulas.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod cli;
pub mod error;
pub mod model;
pub mod outage;
pub mod quadrature;
pub mod report;
pub mod sim;
pub mod specfun;
pub mod validate;

pub use error::{Error, Result};
pub use model::{OutageQuery, PathLossKind, PathLossModel, Radius, SystemConfig};
