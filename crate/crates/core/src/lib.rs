//! Optically mediated interactions between several mechanical modes that
//! share a single driven cavity mode.
//!
//! The crate covers the classical steady states of linearly and quadratically
//! coupled systems, the radiation-induced shifts and damping obtained after
//! eliminating the cavity field, frequency matching of mode pairs, reduced
//! Gaussian covariance dynamics, a full cavity+mechanics oracle used to
//! calibrate the reduced noise model, two-mode state transfer, and a
//! semiclassical integrator for the four-wave-mixing regime.
//!
//! All frequencies and rates are angular (rad/s). The crate is `no_std`
//! and only needs an allocator; file formats and the command line live in
//! the companion `optomech` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod backaction;
pub mod calibration;
pub mod dynamics;
mod error;
pub mod fullmodel;
pub mod fwm;
pub mod gaussian;
pub mod linalg;
pub mod matching;
pub mod meanfield;
pub mod model;
pub mod noise;
pub mod roots;
pub mod transfer;
pub mod units;

pub use error::{Error, Result};
