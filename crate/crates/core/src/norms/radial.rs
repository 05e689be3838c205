//! Tabulated radial profile of the mollified singular family.
//!
//! For `b(y) = φ(|y|) y/|y|` the mollification is again radial, `ψ(r) y/r`,
//! with `ψ(r) = |S^{d-2}| ∫ φ(s) s^{d-1} ∫_0^π ρ_m(ℓ) cosθ sin^{d-2}θ dθ ds`,
//! `ℓ² = r² + s² - 2rs cosθ`. The profile and its derivative are computed
//! by nested Gauss-Legendre quadrature on a graded `r`-grid and evaluated by
//! cubic Hermite interpolation.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::drift::singular_profile;
use super::kernel::MollifierKernel;
use crate::quadrature::{gauss_legendre, sphere_area};

const FINE_PER_RADIUS: f64 = 32.0;
const COARSE_STEP: f64 = 0.005;
const PANELS: usize = 8;
const ORDER: usize = 12;

#[derive(Debug)]
pub struct RadialTable {
    gamma: f64,
    fine_step: f64,
    fine_end: f64,
    fine_count: usize,
    coarse_step: f64,
    r_max: f64,
    r: Vec<f64>,
    psi: Vec<f64>,
    dpsi: Vec<f64>,
}

impl RadialTable {
    /// Shared table for `(dim, m, γ)`.
    pub fn shared(dim: usize, m: u32, gamma: f64) -> Arc<RadialTable> {
        type Key = (usize, u32, u64);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<RadialTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (dim, m, gamma.to_bits());
        if let Some(t) = cache.lock().expect("cache").get(&key) {
            return t.clone();
        }
        let table = Arc::new(RadialTable::build(dim, m, gamma));
        cache.lock().expect("cache").insert(key, table.clone());
        table
    }

    pub fn build(dim: usize, m: u32, gamma: f64) -> Self {
        assert!(dim >= 2, "radial tables need d >= 2");
        let kernel = MollifierKernel::new(dim, m as f64);
        let big_r = kernel.support_radius();
        let fine_step = big_r / FINE_PER_RADIUS;
        let fine_end = 4.0 * big_r;
        let fine_count = (4.0 * FINE_PER_RADIUS) as usize;
        let r_max = 2.0 + big_r;
        let coarse_n = ((r_max - fine_end) / COARSE_STEP).ceil().max(1.0) as usize;
        let coarse_step = (r_max - fine_end) / coarse_n as f64;
        let mut r = Vec::with_capacity(fine_count + coarse_n + 1);
        for i in 0..fine_count {
            r.push(i as f64 * fine_step);
        }
        for i in 0..=coarse_n {
            r.push(fine_end + i as f64 * coarse_step);
        }
        let quad = Quad::new(dim, &kernel, gamma);
        let (psi, dpsi): (Vec<f64>, Vec<f64>) = r.iter().map(|&ri| quad.eval(ri)).unzip();
        Self {
            gamma,
            fine_step,
            fine_end,
            fine_count,
            coarse_step,
            r_max,
            r,
            psi,
            dpsi,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Radius below which the field is treated as linear, `ψ'(0) y`.
    pub fn small_radius(&self) -> f64 {
        1e-3 * self.fine_step
    }

    pub fn slope_at_origin(&self) -> f64 {
        self.dpsi[0]
    }

    /// `(ψ(r), ψ'(r))`.
    #[inline]
    pub fn value(&self, r: f64) -> (f64, f64) {
        if r >= self.r_max {
            return (0.0, 0.0);
        }
        let (i, h) = if r < self.fine_end {
            ((r / self.fine_step) as usize, self.fine_step)
        } else {
            let j = ((r - self.fine_end) / self.coarse_step) as usize;
            (self.fine_count + j, self.coarse_step)
        };
        let i = i.min(self.r.len() - 2);
        let t = (r - self.r[i]) / h;
        let (p0, p1) = (self.psi[i], self.psi[i + 1]);
        let (m0, m1) = (self.dpsi[i] * h, self.dpsi[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1;
        let dv = ((6.0 * t2 - 6.0 * t) * p0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * p1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (v, dv)
    }

    /// `ψ(r)/r`, continuous at the origin.
    #[inline]
    pub fn ratio(&self, r: f64) -> f64 {
        if r < self.small_radius() {
            self.dpsi[0]
        } else {
            self.value(r).0 / r
        }
    }
}

struct Quad<'a> {
    dim: usize,
    kernel: &'a MollifierKernel,
    gamma: f64,
    ring: f64,
    unit_nodes: Vec<f64>,
    unit_weights: Vec<f64>,
}

impl<'a> Quad<'a> {
    fn new(dim: usize, kernel: &'a MollifierKernel, gamma: f64) -> Self {
        let (x, w) = gauss_legendre(ORDER, 0.0, 1.0);
        let ring = if dim == 2 { 2.0 } else { sphere_area(dim - 1) };
        Self {
            dim,
            kernel,
            gamma,
            ring,
            unit_nodes: x,
            unit_weights: w,
        }
    }

    /// Composite rule on `[a, b]` applied to `f`.
    fn composite<F: FnMut(f64) -> (f64, f64)>(&self, a: f64, b: f64, mut f: F) -> (f64, f64) {
        let h = (b - a) / PANELS as f64;
        let mut acc = (0.0, 0.0);
        for p in 0..PANELS {
            let lo = a + p as f64 * h;
            for (x, w) in self.unit_nodes.iter().zip(&self.unit_weights) {
                let (u, v) = f(lo + x * h);
                acc.0 += w * h * u;
                acc.1 += w * h * v;
            }
        }
        acc
    }

    /// Angular integrals of `ρ_m(ℓ) cosθ` and `∂_r ρ_m(ℓ) cosθ` at radii `r`, `s`.
    fn angular(&self, r: f64, s: f64) -> (f64, f64) {
        let big_r = self.kernel.support_radius();
        let th_max = if r * s == 0.0 {
            std::f64::consts::PI
        } else {
            let c = (r * r + s * s - big_r * big_r) / (2.0 * r * s);
            if c >= 1.0 {
                return (0.0, 0.0);
            }
            c.max(-1.0).acos()
        };
        let pw = self.dim as i32 - 2;
        self.composite(0.0, th_max, |th| {
            let (sn, cs) = th.sin_cos();
            let l2 = (r * r + s * s - 2.0 * r * s * cs).max(0.0);
            let l = l2.sqrt();
            let jac = sn.powi(pw) * cs;
            let v = self.kernel.value_r2(l2);
            let dv = if l > 0.0 {
                self.kernel.radial_derivative(l) * (r - s * cs) / l
            } else {
                0.0
            };
            (v * jac, dv * jac)
        })
    }

    fn eval(&self, r: f64) -> (f64, f64) {
        let big_r = self.kernel.support_radius();
        let d = self.dim as i32;
        let radial = |s: f64| -> f64 {
            let (p, _) = singular_profile(self.gamma, s);
            p * s.powi(d - 1)
        };
        let (a, b) = if r < big_r {
            // s = t² removes the s^{d-1-γ} endpoint singularity
            self.composite(0.0, (r + big_r).sqrt(), |t| {
                let s = t * t;
                let (u, v) = self.angular(r, s);
                let f = radial(s) * 2.0 * t;
                (f * u, f * v)
            })
        } else {
            self.composite(r - big_r, r + big_r, |s| {
                let (u, v) = self.angular(r, s);
                let f = radial(s);
                (f * u, f * v)
            })
        };
        (self.ring * a, self.ring * b)
    }
}
