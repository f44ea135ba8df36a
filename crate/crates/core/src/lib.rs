//! Numerical laboratory for the two-dimensional attractive Gross–Pitaevskii
//! minimization problem
//!
//! ```text
//! E_a = inf { ∫ |∇u|² + V|u|² - (a/2)|u|⁴  :  ‖u‖_{L²} = 1 }
//! ```
//!
//! on a large periodic box with Fourier-spectral discretization.

pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod grid;
pub mod minimizer;
pub mod potentials;
pub mod soliton;
pub mod spectrum;

pub use error::{Error, Result};
pub use grid::{Field, Grid2D};
