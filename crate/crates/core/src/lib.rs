//! Duffin–Kemmer–Petiau (DKP) algebra, bilinear currents, and algebraic
//! inversion of the minimally coupled 5-component DKP equation for the gauge
//! potential and field strength.

// Tensor code indexes several arrays by the same Lorentz index, and the
// derivative rules of `Jet` legitimately mix operators.
#![allow(clippy::needless_range_loop, clippy::suspicious_arithmetic_impl)]

pub mod algebra;
pub mod bilinears;
pub mod error;
pub mod fields;
pub mod grid;
pub mod gridfile;
pub mod inversion;
pub mod jet;
pub mod matrix;
pub mod reduce;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
