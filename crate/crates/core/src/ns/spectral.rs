//! Leray projection, divergence and spectral upsampling of vector fields.

use num_complex::Complex64;

use crate::grid::{PeriodicField, SpectralGrid};

/// Leray projection of every snapshot: per mode `F̂ - k (k·F̂)/|k|²`, zero mode unchanged.
pub fn leray_project(field: &PeriodicField) -> PeriodicField {
    let d = field.dim();
    assert_eq!(field.components(), d, "Leray projection needs a d-component field");
    let grid = field.grid();
    let mut out = field.clone();
    for ti in 0..field.times().len() {
        let mut spec: Vec<Vec<Complex64>> = (0..d).map(|c| grid.to_spectral(field.slice(ti, c))).collect();
        project_spectrum(&grid, &mut spec);
        for (c, s) in spec.into_iter().enumerate() {
            let (re, _) = grid.to_real(s);
            out.slice_mut(ti, c).copy_from_slice(&re);
        }
    }
    out
}

/// In-place Leray projection of component spectra.
pub(crate) fn project_spectrum(grid: &SpectralGrid, spec: &mut [Vec<Complex64>]) {
    let d = grid.dim();
    for idx in 0..grid.len() {
        let k2 = grid.k2(idx);
        if k2 == 0.0 {
            continue;
        }
        let k = grid.kvec(idx);
        let mut dot = Complex64::new(0.0, 0.0);
        for a in 0..d {
            dot += k[a] * spec[a][idx];
        }
        let s = dot / k2;
        for a in 0..d {
            spec[a][idx] -= k[a] * s;
        }
    }
}

/// Spectral divergence of snapshot `ti`.
pub fn divergence(field: &PeriodicField, ti: usize) -> Vec<f64> {
    let d = field.dim();
    let grid = field.grid();
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for a in 0..d {
        let mut s = grid.to_spectral(field.slice(ti, a));
        grid.derivative_in_place(&mut s, a);
        for (x, y) in acc.iter_mut().zip(s) {
            *x += y;
        }
    }
    grid.to_real(acc).0
}

/// `‖div F‖ / ‖∇F‖` over all snapshots (0 for a constant field).
pub fn relative_divergence(field: &PeriodicField) -> f64 {
    let grid = field.grid();
    let d = field.dim();
    let mut worst: f64 = 0.0;
    for ti in 0..field.times().len() {
        let div = grid.l2_norm(&divergence(field, ti));
        let mut g2 = 0.0;
        for c in 0..d {
            for a in 0..d {
                g2 += grid.l2_norm(&grid.derivative(field.slice(ti, c), a)).powi(2);
            }
        }
        if g2 > 0.0 {
            worst = worst.max(div / g2.sqrt());
        }
    }
    worst
}

/// Spectrum of a scalar snapshot zero-padded to an `(n·factor)^d` grid (Nyquist dropped),
/// scaled so that the normalised inverse reproduces the field.
pub(crate) fn pad_spectrum(coarse: &SpectralGrid, values: &[f64], fine: &SpectralGrid) -> Vec<Complex64> {
    let n = coarse.n();
    let l = fine.n();
    let d = coarse.dim();
    let spec = coarse.to_spectral(values);
    let scale = (l as f64 / n as f64).powi(d as i32);
    let mut out = vec![Complex64::new(0.0, 0.0); fine.len()];
    'modes: for (idx, v) in spec.iter().enumerate() {
        let mut rem = idx;
        let mut flat = 0;
        let mut stride = 1;
        for _ in 0..d {
            let i = rem % n;
            rem /= n;
            if 2 * i == n {
                continue 'modes;
            }
            let k = if 2 * i < n { i as i64 } else { i as i64 - n as i64 };
            flat += (k.rem_euclid(l as i64) as usize) * stride;
            stride *= l;
        }
        out[flat] = v * scale;
    }
    out
}

/// Upsampled values of a scalar snapshot and, if requested, its gradient.
pub(crate) fn upsample(
    coarse: &SpectralGrid,
    values: &[f64],
    fine: &SpectralGrid,
    with_gradient: bool,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let spec = pad_spectrum(coarse, values, fine);
    let grads = if with_gradient {
        (0..coarse.dim())
            .map(|a| {
                let mut s = spec.clone();
                fine.derivative_in_place(&mut s, a);
                fine.to_real(s).0
            })
            .collect()
    } else {
        Vec::new()
    };
    (fine.to_real(spec).0, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_projection() {
        // (sin y, 0) is divergence free; (sin x, 0) is a gradient
        let shear = PeriodicField::sample(2, 16, 2, vec![0.0], |_, x, o| {
            o[0] = x[1].sin();
            o[1] = 0.0;
        });
        let p = leray_project(&shear);
        for (a, b) in p.values().iter().zip(shear.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let grad = PeriodicField::sample(2, 16, 2, vec![0.0], |_, x, o| {
            o[0] = x[0].sin();
            o[1] = 0.0;
        });
        assert!(leray_project(&grad).values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn upsampling_reproduces_band_limited_fields() {
        let c = SpectralGrid::shared(2, 8);
        let f = SpectralGrid::shared(2, 32);
        let vals = c.sample(|x| (x[0] + 2.0 * x[1]).sin() + 0.3 * (3.0 * x[1]).cos());
        let (up, g) = upsample(&c, &vals, &f, true);
        let exact = f.sample(|x| (x[0] + 2.0 * x[1]).sin() + 0.3 * (3.0 * x[1]).cos());
        let dy = f.sample(|x| 2.0 * (x[0] + 2.0 * x[1]).cos() - 0.9 * (3.0 * x[1]).sin());
        for i in 0..f.len() {
            assert!((up[i] - exact[i]).abs() < 1e-12);
            assert!((g[1][i] - dy[i]).abs() < 1e-11);
        }
    }
}
