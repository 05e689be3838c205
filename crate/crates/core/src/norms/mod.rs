//! Exponent specs, mixed norms, the drift catalog and the mollification operators.

pub mod drift;
pub mod kernel;
pub mod maximal;
pub mod mollify;
pub mod radial;
pub mod scalar;
pub mod spec;

pub use drift::{divergence_ratio, separable, DriftField, GridDrift, Lineage, Mode, Trig};
pub use kernel::MollifierKernel;
pub use maximal::{ball_average, dyadic_radii, maximal_function};
pub use mollify::{mollify, remainder_k, remainder_k_truncated, time_modulus, truncate, RemainderGrid};
pub use scalar::ScalarFn;
pub use spec::{lps_index, mixed_norm, Criticality, LpsIndex, MixedNormSpec};
