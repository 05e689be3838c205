//! Numerical laboratory for stochastic flows with singular drift on the torus.

pub mod error;
pub mod estimators;
pub mod flow;
pub mod grid;
pub mod norms;
pub mod ns;
pub mod pde;
pub mod quadrature;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
pub use grid::{PeriodicField, SpectralGrid};
