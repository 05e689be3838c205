//! Periodic grids on the torus `[0, 2π)^d`: FFTs, sampled fields, local
//! interpolation and the binary snapshot format.

mod field;
pub mod interp;
pub mod io;
mod spectral;

pub use field::PeriodicField;
pub use interp::{Interpolation, SpectralInterpolant};
pub use spectral::SpectralGrid;

/// Largest spatial dimension supported by the fixed-size scratch buffers.
pub const MAX_DIM: usize = 4;

/// Side length of the torus.
pub const PERIOD: f64 = 2.0 * std::f64::consts::PI;

/// Wrap a coordinate into `[0, 2π)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(PERIOD);
    if y >= PERIOD {
        0.0
    } else {
        y
    }
}

/// Minimum-image displacement on the torus.
#[inline]
pub fn min_image(dx: f64) -> f64 {
    let half = 0.5 * PERIOD;
    let mut y = (dx + half).rem_euclid(PERIOD) - half;
    if y < -half {
        y += PERIOD;
    }
    y
}
