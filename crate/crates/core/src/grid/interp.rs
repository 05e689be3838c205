//! Local periodic interpolation on grid fields and exact trigonometric
//! evaluation of band-limited fields with few active modes.

use num_complex::Complex64;

use super::{PeriodicField, MAX_DIM, PERIOD};

/// Local interpolation kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Multilinear (2 nodes per axis).
    Linear,
    /// Keys cubic convolution, `a = -1/2` (4 nodes per axis, third-order accurate).
    #[default]
    Cubic,
}

impl Interpolation {
    pub fn width(self) -> usize {
        match self {
            Interpolation::Linear => 2,
            Interpolation::Cubic => 4,
        }
    }
}

/// Nodes and weights of one axis for a point.
#[derive(Debug, Clone, Copy)]
pub struct AxisStencil {
    pub idx: [usize; 4],
    pub w: [f64; 4],
    pub len: usize,
}

impl AxisStencil {
    pub fn new(x: f64, n: usize, kind: Interpolation) -> Self {
        let s = x * (n as f64 / PERIOD);
        let fl = s.floor();
        let mut f = s - fl;
        let mut i = fl as i64;
        if f >= 1.0 {
            f = 0.0;
            i += 1;
        }
        let ni = n as i64;
        let i0 = if (0..ni).contains(&i) { i } else { i.rem_euclid(ni) } as usize;
        let wrap = |k: usize| if k >= n { k - n } else { k };
        match kind {
            Interpolation::Linear => AxisStencil {
                idx: [i0, wrap(i0 + 1), 0, 0],
                w: [1.0 - f, f, 0.0, 0.0],
                len: 2,
            },
            Interpolation::Cubic => {
                let f2 = f * f;
                let f3 = f2 * f;
                AxisStencil {
                    idx: [wrap(i0 + n - 1), i0, wrap(i0 + 1), wrap(i0 + 2)],
                    w: [
                        0.5 * (-f3 + 2.0 * f2 - f),
                        0.5 * (3.0 * f3 - 5.0 * f2 + 2.0),
                        0.5 * (-3.0 * f3 + 4.0 * f2 + f),
                        0.5 * (f3 - f2),
                    ],
                    len: 4,
                }
            }
        }
    }
}

/// Precomputed tensor stencil of one point: flat node indices and weights.
#[derive(Debug, Clone)]
pub struct PointStencil {
    pub nodes: [usize; 256],
    pub weights: [f64; 256],
    pub len: usize,
}

impl PointStencil {
    pub fn new(x: &[f64], n: usize, kind: Interpolation) -> Self {
        let dim = x.len();
        debug_assert!(dim <= MAX_DIM);
        let axes: Vec<AxisStencil> = x.iter().map(|&xi| AxisStencil::new(xi, n, kind)).collect();
        let w = kind.width();
        let total = w.pow(dim as u32);
        let mut out = PointStencil {
            nodes: [0; 256],
            weights: [0.0; 256],
            len: total,
        };
        for t in 0..total {
            let mut rem = t;
            let mut flat = 0usize;
            let mut weight = 1.0;
            for a in (0..dim).rev() {
                let j = rem % w;
                rem /= w;
                flat += axes[a].idx[j] * n.pow((dim - 1 - a) as u32);
                weight *= axes[a].w[j];
            }
            out.nodes[t] = flat;
            out.weights[t] = weight;
        }
        out
    }

    /// Weighted sum of one component stored contiguously.
    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for t in 0..self.len {
            acc += self.weights[t] * values[self.nodes[t]];
        }
        acc
    }
}

/// Interpolate every component of snapshot `ti` of `field` at `x`.
pub fn interpolate(field: &PeriodicField, ti: usize, x: &[f64], kind: Interpolation, out: &mut [f64]) {
    let st = PointStencil::new(x, field.n(), kind);
    for (c, o) in out.iter_mut().enumerate().take(field.components()) {
        *o = st.apply(field.slice(ti, c));
    }
}

/// Exact evaluation of a band-limited field through its nonzero Fourier modes.
#[derive(Debug, Clone)]
pub struct SpectralInterpolant {
    dim: usize,
    components: usize,
    // per mode: wavevector, then per component complex coefficient
    waves: Vec<[f64; MAX_DIM]>,
    coeffs: Vec<Complex64>,
}

impl SpectralInterpolant {
    /// Keep modes whose magnitude exceeds `rel_tol` times the largest one.
    pub fn from_snapshot(field: &PeriodicField, ti: usize, rel_tol: f64) -> Self {
        let grid = field.grid();
        let dim = field.dim();
        let comps = field.components();
        let len = grid.len();
        let n = field.n();
        let spec: Vec<Vec<Complex64>> = (0..comps)
            .map(|c| grid.to_spectral(field.slice(ti, c)))
            .collect();
        let max = spec
            .iter()
            .flat_map(|s| s.iter().map(|v| v.norm()))
            .fold(0.0, f64::max);
        let mut waves = Vec::new();
        let mut coeffs = Vec::new();
        let scale = 1.0 / len as f64;
        for idx in 0..len {
            let keep = spec.iter().any(|s| s[idx].norm() > rel_tol * max && s[idx].norm() > 0.0);
            if !keep {
                continue;
            }
            let mut k = [0.0; MAX_DIM];
            let mut rem = idx;
            for a in (0..dim).rev() {
                let i = rem % n;
                rem /= n;
                // Nyquist content is attributed to +n/2
                k[a] = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            }
            waves.push(k);
            for s in &spec {
                coeffs.push(s[idx] * scale);
            }
        }
        Self {
            dim,
            components: comps,
            waves,
            coeffs,
        }
    }

    pub fn modes(&self) -> usize {
        self.waves.len()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Field value at `x`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        out[..self.components].fill(0.0);
        for (m, k) in self.waves.iter().enumerate() {
            let phase: f64 = (0..self.dim).map(|a| k[a] * x[a]).sum();
            let (s, c) = phase.sin_cos();
            for comp in 0..self.components {
                let a = self.coeffs[m * self.components + comp];
                out[comp] += a.re * c - a.im * s;
            }
        }
    }

    /// Value and Jacobian `jac[comp * dim + axis] = ∂_axis f_comp` at `x`.
    pub fn eval_with_gradient(&self, x: &[f64], out: &mut [f64], jac: &mut [f64]) {
        let d = self.dim;
        out[..self.components].fill(0.0);
        jac[..self.components * d].fill(0.0);
        for (m, k) in self.waves.iter().enumerate() {
            let phase: f64 = (0..d).map(|a| k[a] * x[a]).sum();
            let (s, c) = phase.sin_cos();
            for comp in 0..self.components {
                let a = self.coeffs[m * self.components + comp];
                let re = a.re * c - a.im * s;
                let dre = -a.re * s - a.im * c;
                out[comp] += re;
                for ax in 0..d {
                    jac[comp * d + ax] += k[ax] * dre;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reproduces_nodes_and_quadratics() {
        let n = 16;
        let h = PERIOD / n as f64;
        let st = AxisStencil::new(3.0 * h, n, Interpolation::Cubic);
        let s: f64 = st.w.iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        assert!((st.w[1] - 1.0).abs() < 1e-15);
        let st = AxisStencil::new(3.3 * h, n, Interpolation::Cubic);
        let f = |i: usize| (i as f64) * (i as f64);
        let v: f64 = (0..4).map(|j| st.w[j] * f(st.idx[j])).sum();
        assert!((v - 3.3 * 3.3).abs() < 1e-12);
    }

    #[test]
    fn cubic_interpolation_converges() {
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let field = PeriodicField::scalar(2, n, |x| x[0].sin() * (2.0 * x[1]).cos());
            let mut worst: f64 = 0.0;
            for i in 0..50 {
                let x = [0.123 * i as f64, 0.377 * i as f64 + 0.1];
                let mut out = [0.0];
                interpolate(&field, 0, &x, Interpolation::Cubic, &mut out);
                worst = worst.max((out[0] - x[0].sin() * (2.0 * x[1]).cos()).abs());
            }
            errs.push(worst);
        }
        assert!(errs[0] / errs[1] > 6.0 && errs[1] / errs[2] > 6.0, "{errs:?}");
    }

    #[test]
    fn spectral_interpolant_is_exact() {
        let field = PeriodicField::sample(2, 16, 2, vec![0.0], |_, x, o| {
            o[0] = x[0].cos() * x[1].sin();
            o[1] = -x[0].sin() * x[1].cos() + 0.5;
        });
        let si = SpectralInterpolant::from_snapshot(&field, 0, 1e-12);
        assert_eq!(si.modes(), 5);
        let x = [0.77, 2.31];
        let mut v = [0.0; 2];
        let mut j = [0.0; 4];
        si.eval_with_gradient(&x, &mut v, &mut j);
        assert!((v[0] - x[0].cos() * x[1].sin()).abs() < 1e-13);
        assert!((v[1] + x[0].sin() * x[1].cos() - 0.5).abs() < 1e-13);
        assert!((j[0] + x[0].sin() * x[1].sin()).abs() < 1e-13);
        assert!((j[1] - x[0].cos() * x[1].cos()).abs() < 1e-13);
    }
}
