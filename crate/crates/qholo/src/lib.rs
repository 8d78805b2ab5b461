//! Strong-field photoelectron holography driven by squeezed light.
//!
//! A classical single-cycle field is sampled from the Wigner function of a
//! squeezed coherent state, each realization is propagated through a
//! saddle-point strong-field model, and the resulting momentum
//! distributions are averaged and analysed for fringe visibility and
//! Fisher information.

pub mod analysis;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod field_model;
pub mod gaussian_optics;
pub mod sfa_engine;

pub use error::{Error, Result};
