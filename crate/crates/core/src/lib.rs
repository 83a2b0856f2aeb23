//! Source-to-source migration of fixed-form FORTRAN 77 with Esope segments
//! into free-form Fortran 2008.

pub mod analysis;
pub mod cli;
pub mod emit;
pub mod error;
pub mod frontend;
pub mod model;
pub mod pipeline;
pub mod transform;

pub use error::{Error, Errors, Phase, Result};
