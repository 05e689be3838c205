//! Two-parameter stochastic flows and their derivative processes.

mod derivative;
mod ensemble;
pub mod euler;
mod summary;

pub use derivative::{
    chaos_series_gradient, default_sigmas, malliavin_derivative, variational_flow, DerivativeKind,
    DerivativeRecord, SeriesRecord, MAX_SERIES_ORDER,
};
pub use ensemble::{restart_flow, simulate_flow, FlowConfig, FlowEnsemble};
pub use summary::{checkpoint_mean_field, summary_csv};
