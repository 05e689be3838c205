//! Stochastic Lagrangian representation of backward Navier–Stokes and its spectral oracle.

mod checks;
mod picard;
mod reference;
mod representation;
mod spectral;
mod tables;

pub use checks::{lp_persistence_check, w_equation_residual, w_field, WResidualConfig};
pub use picard::{
    picard_solve, representation_step, NsRunConfig, RepresentationField, VelocityState, DIVERGENCE_TOLERANCE,
};
pub use reference::{reference_spectral_ns, ReferenceRun};
pub use spectral::{divergence, leray_project, relative_divergence};
