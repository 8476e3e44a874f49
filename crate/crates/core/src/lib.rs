//! Gaussian simulation of coherent-light quantum communication between
//! atomic ensembles.
//!
//! * [`gaussian`]: states, symplectic maps, loss, homodyne conditioning, fidelity.
//! * [`interaction`]: microscopic parameters to the `(κ, ε_p, ε_a)` pass channel.
//! * [`maxwell_bloch`]: grid integration of the linearized propagation equations.
//! * [`protocols`]: two-round Bell measurement, entanglement and teleportation.
//! * [`config`], [`report`], [`cli`]: configuration files and command front end.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod gaussian;
pub mod interaction;
pub mod maxwell_bloch;
pub mod protocols;
pub mod report;

pub use error::{Error, Result};
