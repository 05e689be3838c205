//! Kolmogorov equation on the torus: solver, Bessel-potential norms, probes and dualities.

mod duality;
mod probes;
mod sobolev;
pub(crate) mod solver;

pub use duality::{
    feynman_kac_check, iterated_integral_duality, nested_solution, DualityConfig, IteratedFactor,
    MAX_ITERATION_DEPTH,
};
pub use probes::{
    apriori_probe, hessian, parabolic_embedding_probe, zero_order_probe, EmbeddingCase, NormTable, SolveSetup,
};
pub use sobolev::{bessel_potential, fractional_sobolev_norm, high_frequency_fraction, SobolevNorm, RESOLUTION_WARNING};
pub use solver::{solve_kolmogorov, Direction, Forcing, KolmogorovProblem, PdeSolveReport, CFL_FRACTION};
