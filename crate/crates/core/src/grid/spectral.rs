use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{MAX_DIM, PERIOD};

/// Uniform `n^d` grid on the torus with FFT plans and wavenumber tables.
///
/// Storage is row-major with axis 0 slowest; axis `a` carries coordinate
/// `x[a]`. Odd-derivative wavenumbers zero the Nyquist mode, while `k2`
/// keeps it, so even multipliers stay exact and odd ones stay real.
pub struct SpectralGrid {
    n: usize,
    dim: usize,
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kvec: Vec<f64>,
    k2: Vec<f64>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n", &self.n)
            .field("dim", &self.dim)
            .finish()
    }
}

impl SpectralGrid {
    pub fn new(dim: usize, n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        assert!(n >= 2 && n % 2 == 0, "grid size must be even");
        let len = n.pow(dim as u32);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let wave = |i: usize| -> (f64, f64) {
            // (odd-derivative wavenumber, full wavenumber)
            if i < n / 2 {
                (i as f64, i as f64)
            } else if i == n / 2 {
                (0.0, (n / 2) as f64)
            } else {
                (i as f64 - n as f64, i as f64 - n as f64)
            }
        };
        let mut kvec = vec![0.0; len * dim];
        let mut k2 = vec![0.0; len];
        for idx in 0..len {
            let mut rem = idx;
            for a in (0..dim).rev() {
                let i = rem % n;
                rem /= n;
                let (ko, kf) = wave(i);
                kvec[idx * dim + a] = ko;
                k2[idx] += kf * kf;
            }
        }
        Self {
            n,
            dim,
            len,
            fwd,
            inv,
            kvec,
            k2,
        }
    }

    /// Process-wide shared grid for `(dim, n)`.
    pub fn shared(dim: usize, n: usize) -> Arc<SpectralGrid> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<SpectralGrid>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("grid cache poisoned");
        map.entry((dim, n))
            .or_insert_with(|| Arc::new(SpectralGrid::new(dim, n)))
            .clone()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> f64 {
        PERIOD / self.n as f64
    }

    pub fn volume(&self) -> f64 {
        PERIOD.powi(self.dim as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Derivative wavevector of mode `idx` (Nyquist components zeroed).
    #[inline]
    pub fn kvec(&self, idx: usize) -> &[f64] {
        &self.kvec[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Full squared wavenumber of mode `idx`.
    #[inline]
    pub fn k2(&self, idx: usize) -> f64 {
        self.k2[idx]
    }

    /// Coordinates of node `idx`.
    pub fn node(&self, idx: usize, out: &mut [f64]) {
        let h = self.spacing();
        let mut rem = idx;
        for a in (0..self.dim).rev() {
            out[a] = (rem % self.n) as f64 * h;
            rem /= self.n;
        }
    }

    /// All node coordinates, flattened `len * dim`.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len * self.dim];
        for (idx, chunk) in out.chunks_exact_mut(self.dim).enumerate() {
            self.node(idx, chunk);
        }
        out
    }

    /// Sample a scalar function at the nodes.
    pub fn sample<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> Vec<f64> {
        let mut x = [0.0; MAX_DIM];
        (0..self.len)
            .map(|idx| {
                self.node(idx, &mut x[..self.dim]);
                f(&x[..self.dim])
            })
            .collect()
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len);
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.len];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let outer = self.len / (n * stride);
            // gather lines along `axis` into contiguous rows
            let mut line = 0;
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * n * stride + inner;
                    let row = &mut scratch[line * n..(line + 1) * n];
                    for (i, v) in row.iter_mut().enumerate() {
                        *v = data[base + i * stride];
                    }
                    line += 1;
                }
            }
            plan.process(&mut scratch);
            let mut line = 0;
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * n * stride + inner;
                    let row = &scratch[line * n..(line + 1) * n];
                    for (i, v) in row.iter().enumerate() {
                        data[base + i * stride] = *v;
                    }
                    line += 1;
                }
            }
        }
    }

    /// Unnormalised forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd);
    }

    /// Inverse transform in place, normalised so that `inverse(forward(f)) = f`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv);
        let s = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    pub fn to_spectral(&self, real: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = real.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut data);
        data
    }

    /// Inverse transform; returns the real part and the relative imaginary residue.
    pub fn to_real(&self, mut spec: Vec<Complex64>) -> (Vec<f64>, f64) {
        self.inverse(&mut spec);
        let mut re_max: f64 = 0.0;
        let mut im_max: f64 = 0.0;
        let out = spec
            .iter()
            .map(|c| {
                re_max = re_max.max(c.re.abs());
                im_max = im_max.max(c.im.abs());
                c.re
            })
            .collect();
        let residue = if re_max > 0.0 { im_max / re_max } else { im_max };
        (out, residue)
    }

    /// Real-space result of multiplying the spectrum by `m(k2)`.
    pub fn apply_multiplier<M: Fn(f64) -> f64>(&self, field: &[f64], m: M) -> Vec<f64> {
        let mut spec = self.to_spectral(field);
        for (idx, c) in spec.iter_mut().enumerate() {
            *c *= m(self.k2[idx]);
        }
        self.to_real(spec).0
    }

    /// Spectral partial derivative along `axis`.
    pub fn derivative(&self, field: &[f64], axis: usize) -> Vec<f64> {
        let mut spec = self.to_spectral(field);
        self.derivative_in_place(&mut spec, axis);
        self.to_real(spec).0
    }

    /// Multiply a spectrum by `i k_axis`.
    pub fn derivative_in_place(&self, spec: &mut [Complex64], axis: usize) {
        for (idx, c) in spec.iter_mut().enumerate() {
            let k = self.kvec[idx * self.dim + axis];
            *c = Complex64::new(-k * c.im, k * c.re);
        }
    }

    /// Second derivative `∂_a ∂_b` of a spectrum, returned as real field.
    pub fn second_derivative(&self, spec: &[Complex64], a: usize, b: usize) -> Vec<f64> {
        let mut s: Vec<Complex64> = spec.to_vec();
        for (idx, c) in s.iter_mut().enumerate() {
            let ka = self.kvec[idx * self.dim + a];
            let kb = self.kvec[idx * self.dim + b];
            *c *= -ka * kb;
        }
        self.to_real(s).0
    }

    /// Laplacian of a real field.
    pub fn laplacian(&self, field: &[f64]) -> Vec<f64> {
        self.apply_multiplier(field, |k2| -k2)
    }

    /// Grid L^2 norm `(∫|f|^2 dx)^{1/2}` of a multi-component field stored component-major.
    pub fn l2_norm(&self, field: &[f64]) -> f64 {
        (field.iter().map(|v| v * v).sum::<f64>() * self.cell_volume()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derivative_of_mode() {
        let g = SpectralGrid::new(3, 16);
        let f = g.sample(|x| (2.0 * x[1]).sin() * x[0].cos());
        let df = g.derivative(&f, 1);
        let exact = g.sample(|x| 2.0 * (2.0 * x[1]).cos() * x[0].cos());
        for (a, b) in df.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_is_real() {
        let g = SpectralGrid::new(2, 32);
        let f = g.sample(|x| (x[0] + 0.3 * x[1]).sin().exp());
        let (back, residue) = g.to_real(g.to_spectral(&f));
        assert!(residue < 1e-12);
        for (a, b) in back.iter().zip(&f) {
            assert_relative_eq!(*a, *b, epsilon = 1e-13);
        }
    }
}
