//! Packed cubic-interpolation tables of grid velocities on a refined grid.
//!
//! Each segment between consecutive snapshot times stores, per fine node, the
//! velocity and its Jacobian at both ends, so one stencil pass yields the
//! time-blended drift and gradient.

use crate::grid::interp::AxisStencil;
use crate::grid::{Interpolation, PeriodicField, SpectralGrid, MAX_DIM};
use crate::norms::ScalarFn;

use super::spectral::upsample;

/// Values per fine node of one snapshot: `d` velocity components then `d²`
/// Jacobian entries `∂_j u_i` at `d + i*d + j`.
fn record_len(d: usize) -> usize {
    d + d * d
}

/// Build the per-node record of one snapshot on the fine grid.
fn snapshot_records(coarse: &SpectralGrid, fine: &SpectralGrid, comps: &[&[f64]]) -> Vec<f64> {
    let d = coarse.dim();
    let rl = record_len(d);
    let len = fine.len();
    let mut out = vec![0.0; len * rl];
    for (i, vals) in comps.iter().enumerate() {
        let (v, g) = upsample(coarse, vals, fine, true);
        for node in 0..len {
            out[node * rl + i] = v[node];
            for j in 0..d {
                out[node * rl + d + i * d + j] = g[j][node];
            }
        }
    }
    out
}

/// Two-dimensional gather with a compile-time record length.
#[inline]
fn gather_2d<const S: usize>(table: &[f64], n: usize, axes: &[AxisStencil], out: &mut [f64]) {
    let mut acc = [0.0; S];
    for i in 0..4 {
        let row = axes[0].idx[i] * n;
        let mut line = [0.0; S];
        for j in 0..4 {
            let base = (row + axes[1].idx[j]) * S;
            let rec: &[f64; S] = table[base..base + S].try_into().unwrap();
            let w = axes[1].w[j];
            for c in 0..S {
                line[c] += w * rec[c];
            }
        }
        let wi = axes[0].w[i];
        for c in 0..S {
            acc[c] += wi * line[c];
        }
    }
    out[..S].copy_from_slice(&acc);
}

/// Accumulate `Σ w · table[node*stride + c]` over the cubic stencil of `x`.
#[inline]
fn gather(table: &[f64], stride: usize, n: usize, d: usize, x: &[f64], out: &mut [f64]) {
    let mut axes = [AxisStencil {
        idx: [0; 4],
        w: [0.0; 4],
        len: 0,
    }; MAX_DIM];
    for a in 0..d {
        axes[a] = AxisStencil::new(x[a], n, Interpolation::Cubic);
    }
    out[..stride].fill(0.0);
    match (d, stride) {
        (2, 12) => gather_2d::<12>(table, n, &axes, out),
        (2, 6) => gather_2d::<6>(table, n, &axes, out),
        (2, 2) => gather_2d::<2>(table, n, &axes, out),
        (2, _) => {
            for i in 0..4 {
                let row = axes[0].idx[i] * n;
                let wi = axes[0].w[i];
                for j in 0..4 {
                    let w = wi * axes[1].w[j];
                    let base = (row + axes[1].idx[j]) * stride;
                    for c in 0..stride {
                        out[c] += w * table[base + c];
                    }
                }
            }
        }
        _ => {
            let total = 4usize.pow(d as u32);
            for t in 0..total {
                let mut rem = t;
                let mut flat = 0;
                let mut w = 1.0;
                for a in (0..d).rev() {
                    let j = rem % 4;
                    rem /= 4;
                    flat += axes[a].idx[j] * n.pow((d - 1 - a) as u32);
                    w *= axes[a].w[j];
                }
                let base = flat * stride;
                for c in 0..stride {
                    out[c] += w * table[base + c];
                }
            }
        }
    }
}

/// Piecewise-linear-in-time velocity with Jacobian, cubic in space on a refined grid.
#[derive(Debug, Clone)]
pub(crate) struct VelocityTables {
    dim: usize,
    n_fine: usize,
    times: Vec<f64>,
    /// Per segment: `[node][end 0|1][record]`.
    segments: Vec<Vec<f64>>,
    zero: bool,
}

impl VelocityTables {
    /// `snapshots` are `(time, d-component single-time field)` in ascending time.
    pub(crate) fn new(snapshots: &[(f64, &PeriodicField)], factor: usize) -> Self {
        let first = snapshots[0].1;
        let d = first.dim();
        let coarse = first.grid();
        let fine = SpectralGrid::shared(d, first.n() * factor);
        let rl = record_len(d);
        let zero = snapshots.iter().all(|(_, f)| f.values().iter().all(|&v| v == 0.0));
        let times: Vec<f64> = snapshots.iter().map(|s| s.0).collect();
        let mut segments = Vec::new();
        if !zero {
            let recs: Vec<Vec<f64>> = snapshots
                .iter()
                .map(|(_, f)| {
                    let comps: Vec<&[f64]> = (0..d).map(|c| f.slice(0, c)).collect();
                    snapshot_records(&coarse, &fine, &comps)
                })
                .collect();
            let nseg = recs.len().saturating_sub(1).max(1);
            for s in 0..nseg {
                let a = &recs[s];
                let b = &recs[(s + 1).min(recs.len() - 1)];
                let mut seg = vec![0.0; fine.len() * 2 * rl];
                for node in 0..fine.len() {
                    let o = node * 2 * rl;
                    seg[o..o + rl].copy_from_slice(&a[node * rl..(node + 1) * rl]);
                    seg[o + rl..o + 2 * rl].copy_from_slice(&b[node * rl..(node + 1) * rl]);
                }
                segments.push(seg);
            }
        }
        Self {
            dim: d,
            n_fine: fine.n(),
            times,
            segments,
            zero,
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.zero
    }

    /// Segment and blend weight for time `t`.
    pub(crate) fn locate(&self, t: f64) -> (usize, f64) {
        let nt = self.times.len();
        if nt < 2 || t <= self.times[0] {
            return (0, 0.0);
        }
        if t >= self.times[nt - 1] {
            return (nt - 2, 1.0);
        }
        let hi = self.times.partition_point(|&s| s <= t).min(nt - 1);
        let lo = hi - 1;
        (lo, (t - self.times[lo]) / (self.times[hi] - self.times[lo]))
    }

    /// Velocity into `b[..d]` and Jacobian into `jac[..d²]` at `x`.
    #[inline]
    pub(crate) fn eval(&self, seg: usize, theta: f64, x: &[f64], b: &mut [f64], jac: &mut [f64]) {
        let d = self.dim;
        let rl = record_len(d);
        if self.zero {
            b[..d].fill(0.0);
            jac[..d * d].fill(0.0);
            return;
        }
        let mut buf = [0.0; 2 * (MAX_DIM + MAX_DIM * MAX_DIM)];
        gather(&self.segments[seg], 2 * rl, self.n_fine, d, x, &mut buf);
        for c in 0..d {
            b[c] = (1.0 - theta) * buf[c] + theta * buf[rl + c];
        }
        for c in 0..d * d {
            jac[c] = (1.0 - theta) * buf[d + c] + theta * buf[rl + d + c];
        }
    }
}

/// Terminal data evaluated along paths.
#[derive(Debug, Clone)]
pub(crate) enum Terminal {
    /// `d`-component grid field, cubic on a refined grid: `[node][comp]`.
    Vector { n_fine: usize, dim: usize, table: Vec<f64> },
    Scalar(ScalarFn),
}

impl Terminal {
    pub(crate) fn vector(field: &PeriodicField, factor: usize) -> Self {
        let d = field.dim();
        let coarse = field.grid();
        let fine = SpectralGrid::shared(d, field.n() * factor);
        let mut table = vec![0.0; fine.len() * d];
        for c in 0..d {
            let (v, _) = upsample(&coarse, field.slice(0, c), &fine, false);
            for (node, val) in v.into_iter().enumerate() {
                table[node * d + c] = val;
            }
        }
        Terminal::Vector {
            n_fine: fine.n(),
            dim: d,
            table,
        }
    }

    pub(crate) fn components(&self) -> usize {
        match self {
            Terminal::Vector { dim, .. } => *dim,
            Terminal::Scalar(_) => 1,
        }
    }

    #[inline]
    pub(crate) fn eval(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Terminal::Vector { n_fine, dim, table } => gather(table, *dim, *n_fine, *dim, x, out),
            Terminal::Scalar(f) => out[0] = f.eval(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_blend_in_time_and_match_gradients() {
        let a = PeriodicField::sample(2, 16, 2, vec![0.0], |_, x, o| {
            o[0] = x[1].sin();
            o[1] = 0.5 * x[0].cos();
        });
        let b = a.map(|v| 3.0 * v);
        let t = VelocityTables::new(&[(0.0, &a), (1.0, &b)], 4);
        let (seg, th) = t.locate(0.25);
        assert_eq!(seg, 0);
        let x = [0.77, 2.31];
        let mut v = [0.0; 2];
        let mut j = [0.0; 4];
        t.eval(seg, th, &x, &mut v, &mut j);
        let s = 1.0 + 2.0 * th;
        assert!((v[0] - s * x[1].sin()).abs() < 1e-5);
        assert!((v[1] - s * 0.5 * x[0].cos()).abs() < 1e-5);
        assert!((j[1] - s * x[1].cos()).abs() < 1e-5);
        assert!((j[2] + s * 0.5 * x[0].sin()).abs() < 1e-5);
        assert!(j[0].abs() < 1e-12 && j[3].abs() < 1e-12);
    }
}
