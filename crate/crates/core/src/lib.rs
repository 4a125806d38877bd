//! Controller synthesis with certified fixed-point error bounds.
//!
//! The pipeline discretizes a linear plant, assembles the observer-based
//! closed loop, generates a fixed-point implementation of the controller,
//! bounds its quantization error with per-operation MILPs and searches the
//! gain space with a particle swarm.

pub mod analysis;
pub mod errbound;
pub mod error;
pub mod fxcode;
pub mod linalg;
mod numfmt;
pub mod plant;
pub mod problem;
pub mod pso;

pub use error::{Error, Result};
