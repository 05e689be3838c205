//! Discrete Hardy-Littlewood maximal function on periodic grids.

use crate::grid::{PeriodicField, SpectralGrid, MAX_DIM, PERIOD};

/// Radii used by [`maximal_function`]: `0` and `h·2^j` up to half the period.
pub fn dyadic_radii(n: usize) -> Vec<f64> {
    let h = PERIOD / n as f64;
    let mut radii = vec![0.0];
    let mut r = h;
    while r <= 0.5 * PERIOD + 1e-12 {
        radii.push(r);
        r *= 2.0;
    }
    radii
}

/// Node offsets (as flat indices of the centered displacement) within distance `r` of node 0.
fn ball_indicator(grid: &SpectralGrid, r: f64) -> Vec<f64> {
    let n = grid.n();
    let d = grid.dim();
    let h = grid.spacing();
    let tol = 1e-9 * h;
    (0..grid.len())
        .map(|idx| {
            let mut rem = idx;
            let mut r2 = 0.0;
            for _ in 0..d {
                let i = rem % n;
                rem /= n;
                let off = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
                r2 += (off * h) * (off * h);
            }
            if r2.sqrt() <= r + tol {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Ball average of `values` at radius `r` for every node (periodic, via FFT).
pub fn ball_average(grid: &SpectralGrid, values: &[f64], r: f64) -> Vec<f64> {
    let ind = ball_indicator(grid, r);
    let count: f64 = ind.iter().sum();
    let mut k = grid.to_spectral(&ind);
    let f = grid.to_spectral(values);
    for (a, b) in k.iter_mut().zip(&f) {
        *a *= *b;
    }
    let (conv, _) = grid.to_real(k);
    conv.into_iter().map(|v| v / count).collect()
}

/// `ℳf(x) = max_r ⨍_{B(x,r)} |f|` over [`dyadic_radii`], per time sample.
///
/// Vector fields are reduced to their pointwise magnitude first.
pub fn maximal_function(field: &PeriodicField) -> PeriodicField {
    let mag = field.magnitude();
    let grid = mag.grid();
    let radii = dyadic_radii(field.n());
    let mut out = mag.clone();
    for ti in 0..mag.times().len() {
        let abs = mag.slice(ti, 0).to_vec();
        let mut best = abs.clone();
        for &r in radii.iter().skip(1) {
            let avg = ball_average(&grid, &abs, r);
            for (b, a) in best.iter_mut().zip(&avg) {
                *b = b.max(*a);
            }
        }
        out.slice_mut(ti, 0).copy_from_slice(&best);
    }
    out
}

/// Brute-force ball average at one node (direct summation; test oracle).
pub fn ball_average_direct(field: &PeriodicField, ti: usize, node: usize, r: f64) -> f64 {
    let mag = field.magnitude();
    let grid = mag.grid();
    let d = grid.dim();
    let h = grid.spacing();
    let mut x0 = [0.0; MAX_DIM];
    grid.node(node, &mut x0[..d]);
    let mut x = [0.0; MAX_DIM];
    let (mut sum, mut count) = (0.0, 0.0);
    for idx in 0..grid.len() {
        grid.node(idx, &mut x[..d]);
        let r2: f64 = (0..d).map(|a| crate::grid::min_image(x[a] - x0[a]).powi(2)).sum();
        if r2.sqrt() <= r + 1e-9 * h {
            sum += mag.slice(ti, 0)[idx];
            count += 1.0;
        }
    }
    sum / count
}
