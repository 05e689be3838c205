//! Scalar test functions (forcings, terminal data, observables).

use std::sync::Arc;

use crate::grid::{min_image, PeriodicField, MAX_DIM};

type ScalarEval = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Time-independent scalar function on the torus with an analytic gradient.
#[derive(Clone)]
pub enum ScalarFn {
    Constant(f64),
    /// `Σ amp cos(k·x + phase)`.
    Modes(Vec<(f64, [f64; MAX_DIM], f64)>),
    /// Periodised Gaussian `amp exp(-|y|²/(2 width²))`, `y` the minimum image of `x - center`.
    Bump {
        center: [f64; MAX_DIM],
        width: f64,
        amp: f64,
    },
    Custom(Arc<ScalarEval>),
}

impl std::fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScalarFn::Constant(c) => write!(f, "Constant({c})"),
            ScalarFn::Modes(m) => write!(f, "Modes({} terms)", m.len()),
            ScalarFn::Bump { width, amp, .. } => write!(f, "Bump(width={width}, amp={amp})"),
            ScalarFn::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl ScalarFn {
    /// `amp cos(k·x)`.
    pub fn cosine(k: &[f64], amp: f64) -> Self {
        Self::mode(k, amp, 0.0)
    }

    /// `amp sin(k·x)`.
    pub fn sine(k: &[f64], amp: f64) -> Self {
        Self::mode(k, amp, -0.5 * std::f64::consts::PI)
    }

    pub fn mode(k: &[f64], amp: f64, phase: f64) -> Self {
        let mut kk = [0.0; MAX_DIM];
        kk[..k.len()].copy_from_slice(k);
        ScalarFn::Modes(vec![(amp, kk, phase)])
    }

    pub fn bump(center: &[f64], width: f64, amp: f64) -> Self {
        let mut c = [0.0; MAX_DIM];
        c[..center.len()].copy_from_slice(center);
        ScalarFn::Bump {
            center: c,
            width,
            amp,
        }
    }

    /// Multiply by a constant.
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            ScalarFn::Constant(c) => ScalarFn::Constant(c * s),
            ScalarFn::Modes(m) => ScalarFn::Modes(m.iter().map(|&(a, k, p)| (a * s, k, p)).collect()),
            ScalarFn::Bump { center, width, amp } => ScalarFn::Bump {
                center: *center,
                width: *width,
                amp: amp * s,
            },
            ScalarFn::Custom(f) => {
                let f = f.clone();
                ScalarFn::Custom(Arc::new(move |x| s * f(x)))
            }
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::Modes(m) => m
                .iter()
                .map(|(a, k, p)| {
                    let ph: f64 = p + x.iter().zip(k).map(|(xi, ki)| xi * ki).sum::<f64>();
                    a * ph.cos()
                })
                .sum(),
            ScalarFn::Bump { center, width, amp } => {
                let r2: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(xi, ci)| min_image(xi - ci).powi(2))
                    .sum();
                amp * (-r2 / (2.0 * width * width)).exp()
            }
            ScalarFn::Custom(f) => f(x),
        }
    }

    /// `∂_axis f(x)`; custom functions use a central difference.
    #[inline]
    pub fn partial(&self, x: &[f64], axis: usize) -> f64 {
        match self {
            ScalarFn::Constant(_) => 0.0,
            ScalarFn::Modes(m) => m
                .iter()
                .map(|(a, k, p)| {
                    let ph: f64 = p + x.iter().zip(k).map(|(xi, ki)| xi * ki).sum::<f64>();
                    -a * k[axis] * ph.sin()
                })
                .sum(),
            ScalarFn::Bump { center, width, .. } => {
                let y = min_image(x[axis] - center[axis]);
                -y / (width * width) * self.eval(x)
            }
            ScalarFn::Custom(f) => {
                let h = 1e-6;
                let mut xp = [0.0; MAX_DIM];
                let mut xm = [0.0; MAX_DIM];
                xp[..x.len()].copy_from_slice(x);
                xm[..x.len()].copy_from_slice(x);
                xp[axis] += h;
                xm[axis] -= h;
                (f(&xp[..x.len()]) - f(&xm[..x.len()])) / (2.0 * h)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ScalarFn::Constant(_))
    }

    /// Sample on an `n^d` grid as a single-time scalar field.
    pub fn sample(&self, dim: usize, n: usize) -> PeriodicField {
        PeriodicField::scalar(dim, n, |x| self.eval(x))
    }

    /// Sample `∂_axis f` on an `n^d` grid.
    pub fn sample_partial(&self, dim: usize, n: usize, axis: usize) -> PeriodicField {
        PeriodicField::scalar(dim, n, |x| self.partial(x, axis))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partials_match_differences() {
        let fs = [
            ScalarFn::sine(&[1.0, 2.0], 0.5),
            ScalarFn::bump(&[3.0, 3.0], 0.6, 2.0),
        ];
        let x = [2.7, 3.4];
        for f in &fs {
            for a in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[a] += 1e-6;
                xm[a] -= 1e-6;
                let fd = (f.eval(&xp) - f.eval(&xm)) / 2e-6;
                assert!((f.partial(&x, a) - fd).abs() < 1e-7);
            }
        }
        let s = ScalarFn::sine(&[1.0, 0.0], 1.0);
        assert!((s.eval(&[0.3, 0.0]) - 0.3f64.sin()).abs() < 1e-15);
    }
}
