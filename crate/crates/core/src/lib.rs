//! Simulation models for learning as energy seeking.
//!
//! - [`autoencoder`]: linear classical and parroting autoencoders, split encoder/decoder training
//! - [`collective`]: ensembles of parroting agents aligning their decoders, objective image
//! - [`digital`]: reversible subtraction, Landauer energy ledger, residual energy extraction
//! - [`analog`]: driven damped oscillator, power-flow bookkeeping, resonance checks
//! - [`tuner`]: noise-driven random-walk tuner with a power-dependent brake
//! - [`resonet`]: random RLC networks, cycle rank, modal spectrum, drive response
//!
//! Every stochastic routine takes an explicit seed; identical inputs give identical outputs.

// `!(x > 0.0)` is the NaN-rejecting form used throughout for input checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analog;
pub mod autoencoder;
pub mod collective;
pub mod csvio;
pub mod digital;
mod error;
pub mod linalg;
pub mod resonet;
pub mod tuner;

pub use error::{Error, Location, Result};
