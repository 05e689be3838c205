//! Euler-Maruyama integration of single paths with regenerated noise.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::MAX_DIM;
use crate::norms::DriftField;
use crate::rng::BrownianSource;

/// Steps of noise generated per refill.
const NOISE_CHUNK: usize = 256;

/// Number of `dt` steps in `[a, b]`, or a domain error if `dt` does not divide it.
pub fn steps_between(a: f64, b: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(b >= a) {
        return Err(Error::Domain(format!("invalid time window [{a}, {b}] with dt = {dt}")));
    }
    let k = (b - a) / dt;
    let kr = k.round();
    if (k - kr).abs() > 1e-6 {
        return Err(Error::Domain(format!(
            "dt = {dt} does not divide the window [{a}, {b}]"
        )));
    }
    Ok(kr as usize)
}

/// Integrate one path `X_{k+1} = (X_k + b(t_k, X_k) dt) + ΔW_k` in place.
///
/// `x` holds the state at time `t0`, which is grid step `first_step` of
/// `source`. Before each step, `visit(k, t_k, x_k, ΔW_k)` sees the current
/// state and the increment about to be applied.
#[allow(clippy::too_many_arguments)]
pub fn integrate_path<V>(
    drift: &DriftField,
    source: &BrownianSource,
    path: u64,
    x: &mut [f64],
    t0: f64,
    first_step: u64,
    steps: usize,
    mut visit: V,
) -> Result<()>
where
    V: FnMut(usize, f64, &[f64], &[f64]),
{
    let d = x.len();
    let dt = source.dt();
    let zero = drift.is_zero();
    let mut noise = vec![0.0; NOISE_CHUNK.min(steps.max(1)) * d];
    let mut b = [0.0; MAX_DIM];
    let mut k = 0;
    while k < steps {
        let n = (steps - k).min(NOISE_CHUNK);
        source.fill(path, first_step + k as u64, &mut noise[..n * d]);
        for j in 0..n {
            let t = t0 + (k + j) as f64 * dt;
            let dw = &noise[j * d..(j + 1) * d];
            visit(k + j, t, x, dw);
            if zero {
                for a in 0..d {
                    x[a] += dw[a];
                }
            } else {
                drift.eval(t, x, &mut b);
                for a in 0..d {
                    if !b[a].is_finite() {
                        return Err(Error::NonFinite { t, x: x.to_vec() });
                    }
                    x[a] = (x[a] + b[a] * dt) + dw[a];
                }
            }
        }
        k += n;
    }
    Ok(())
}

/// Left Riemann sums `dt Σ_k f(X_k)` over `steps` steps for paths `0..paths`
/// started at `x` (grid step `first_step` of `source`), in path order.
#[allow(clippy::too_many_arguments)]
pub fn path_integrals<F>(
    drift: &DriftField,
    source: &BrownianSource,
    x: &[f64],
    t0: f64,
    first_step: u64,
    steps: usize,
    paths: usize,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    (0..paths)
        .into_par_iter()
        .map(|m| {
            let mut y = x.to_vec();
            let mut acc = 0.0;
            integrate_path(drift, source, m as u64, &mut y, t0, first_step, steps, |_, _, xk, _| acc += f(xk))?;
            Ok(acc * source.dt())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_drift_is_noise_sum() {
        let src = BrownianSource::new(3, 2, 0.01, 0.0);
        let mut x = [0.5, 1.0];
        integrate_path(&DriftField::zero(2), &src, 4, &mut x, 0.0, 0, 600, |_, _, _, _| {}).unwrap();
        let w = src.increments(4, 0, 600);
        let mut y = [0.5, 1.0];
        for step in w.chunks(2) {
            y[0] += step[0];
            y[1] += step[1];
        }
        assert_eq!(x, y);
    }

    #[test]
    fn window_divisibility() {
        assert_eq!(steps_between(0.0, 1.0, 1e-3).unwrap(), 1000);
        assert!(steps_between(0.0, 1.0, 0.3).is_err());
    }
}
