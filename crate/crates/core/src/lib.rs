//! Numerical laboratory for zero modes of the three-dimensional massless
//! Dirac operator `H = α·D + Q(x)` on periodic grids.

pub mod acceptance;
pub mod bootstrap;
pub mod clifford;
pub mod error;
pub mod field;
pub mod fourier;
pub mod freeop;
pub mod kernelnorm;
pub mod potential;
pub mod rational;
pub mod resonance;

pub use error::{LabError, Result};
