use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::SpectralGrid;
use crate::error::{Error, Result};

/// Scalar or vector field sampled on an `n^d` torus grid at a sequence of times.
///
/// Values are stored `[time][component][node]`. The spectral coefficients of
/// every slice are computed lazily and cached until the next mutable access.
#[derive(Debug, Clone)]
pub struct PeriodicField {
    dim: usize,
    n: usize,
    components: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    spectral: OnceLock<Vec<Complex64>>,
}

impl PartialEq for PeriodicField {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && self.components == other.components
            && self.times == other.times
            && self.values == other.values
    }
}

impl PeriodicField {
    pub fn zeros(dim: usize, n: usize, components: usize, times: Vec<f64>) -> Self {
        let len = n.pow(dim as u32) * components * times.len();
        Self {
            dim,
            n,
            components,
            times,
            values: vec![0.0; len],
            spectral: OnceLock::new(),
        }
    }

    pub fn from_values(
        dim: usize,
        n: usize,
        components: usize,
        times: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let expected = n.pow(dim as u32) * components * times.len();
        if values.len() != expected {
            return Err(Error::Data(format!(
                "field has {} values, expected {expected}",
                values.len()
            )));
        }
        Ok(Self {
            dim,
            n,
            components,
            times,
            values,
            spectral: OnceLock::new(),
        })
    }

    /// Sample `f(t, x, out)` at every node and time.
    pub fn sample<F>(dim: usize, n: usize, components: usize, times: Vec<f64>, mut f: F) -> Self
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let grid = SpectralGrid::shared(dim, n);
        let mut field = Self::zeros(dim, n, components, times);
        let nodes = grid.nodes();
        let len = grid.len();
        let mut buf = vec![0.0; components];
        for ti in 0..field.times.len() {
            let t = field.times[ti];
            for idx in 0..len {
                f(t, &nodes[idx * dim..(idx + 1) * dim], &mut buf);
                for c in 0..components {
                    field.values[(ti * components + c) * len + idx] = buf[c];
                }
            }
        }
        field
    }

    /// Time-independent scalar field from a closure.
    pub fn scalar<F: FnMut(&[f64]) -> f64>(dim: usize, n: usize, mut f: F) -> Self {
        Self::sample(dim, n, 1, vec![0.0], |_, x, out| out[0] = f(x))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn nodes_len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn grid(&self) -> Arc<SpectralGrid> {
        SpectralGrid::shared(self.dim, self.n)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        self.spectral.take();
        &mut self.values
    }

    /// All components at time index `ti`, component-major.
    pub fn snapshot(&self, ti: usize) -> &[f64] {
        let s = self.nodes_len() * self.components;
        &self.values[ti * s..(ti + 1) * s]
    }

    pub fn snapshot_mut(&mut self, ti: usize) -> &mut [f64] {
        self.spectral.take();
        let s = self.nodes_len() * self.components;
        &mut self.values[ti * s..(ti + 1) * s]
    }

    /// One component at time index `ti`.
    pub fn slice(&self, ti: usize, c: usize) -> &[f64] {
        let len = self.nodes_len();
        let base = (ti * self.components + c) * len;
        &self.values[base..base + len]
    }

    pub fn slice_mut(&mut self, ti: usize, c: usize) -> &mut [f64] {
        self.spectral.take();
        let len = self.nodes_len();
        let base = (ti * self.components + c) * len;
        &mut self.values[base..base + len]
    }

    /// Append a snapshot (component-major) at time `t`.
    pub fn push(&mut self, t: f64, snapshot: &[f64]) {
        assert_eq!(snapshot.len(), self.nodes_len() * self.components);
        self.spectral.take();
        self.times.push(t);
        self.values.extend_from_slice(snapshot);
    }

    /// Single-time field holding snapshot `ti`.
    pub fn at(&self, ti: usize) -> PeriodicField {
        PeriodicField {
            dim: self.dim,
            n: self.n,
            components: self.components,
            times: vec![self.times[ti]],
            values: self.snapshot(ti).to_vec(),
            spectral: OnceLock::new(),
        }
    }

    /// Cached spectral coefficients, laid out like the values.
    pub fn spectral(&self) -> &[Complex64] {
        self.spectral.get_or_init(|| {
            let grid = self.grid();
            let len = grid.len();
            let mut out = Vec::with_capacity(self.values.len());
            for chunk in self.values.chunks_exact(len) {
                out.extend(grid.to_spectral(chunk));
            }
            out
        })
    }

    /// Relative imaginary residue of a spectral round trip (realness check).
    pub fn round_trip_residue(&self) -> f64 {
        let grid = self.grid();
        let len = grid.len();
        let mut worst: f64 = 0.0;
        let mut max_err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (chunk, spec) in self.values.chunks_exact(len).zip(self.spectral().chunks_exact(len)) {
            let (back, residue) = grid.to_real(spec.to_vec());
            worst = worst.max(residue);
            for (a, b) in back.iter().zip(chunk) {
                max_err = max_err.max((a - b).abs());
                scale = scale.max(b.abs());
            }
        }
        let rel = if scale > 0.0 { max_err / scale } else { max_err };
        worst.max(rel)
    }

    pub fn has_nan(&self) -> bool {
        self.values.iter().any(|v| !v.is_finite())
    }

    /// Map every value through `f`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> PeriodicField {
        let mut out = self.clone();
        out.spectral = OnceLock::new();
        for v in out.values.iter_mut() {
            *v = f(*v);
        }
        out
    }

    /// Pointwise Euclidean magnitude across components (single component result).
    pub fn magnitude(&self) -> PeriodicField {
        let len = self.nodes_len();
        let mut out = PeriodicField::zeros(self.dim, self.n, 1, self.times.clone());
        for ti in 0..self.times.len() {
            for idx in 0..len {
                let mut s = 0.0;
                for c in 0..self.components {
                    let v = self.slice(ti, c)[idx];
                    s += v * v;
                }
                out.values[ti * len + idx] = s.sqrt();
            }
        }
        out
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &PeriodicField) -> PeriodicField {
        assert_eq!(self.values.len(), other.values.len());
        let mut out = self.clone();
        out.spectral = OnceLock::new();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
        out
    }
}
