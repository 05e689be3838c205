//! The mollifier `ρ_m(x) = m^d ρ(m x)` and its Fourier transform.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::quadrature::{integrate, sphere_area};

/// Support radius of the base profile `ρ`.
pub const PROFILE_RADIUS: f64 = 2.0;

/// Unnormalised base bump `exp(-1/(1-|x/2|^2))` as a function of `|x|^2`.
#[inline]
fn bump_r2(r2: f64) -> f64 {
    let s = 0.25 * r2;
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s)).exp()
    }
}

/// Smooth unit-mass bump kernel at scale `m`, supported in `|x| < 2/m`.
#[derive(Debug)]
pub struct MollifierKernel {
    dim: usize,
    m: f64,
    norm: f64,
    transform: Mutex<HashMap<u64, f64>>,
}

impl MollifierKernel {
    /// Kernel at scale `m` in dimension `dim`; normalisation is cached per dimension.
    pub fn new(dim: usize, m: f64) -> Self {
        assert!(m > 0.0, "mollifier scale must be positive");
        Self {
            dim,
            m,
            norm: profile_normaliser(dim),
            transform: Mutex::new(HashMap::new()),
        }
    }

    /// Shared kernel instance (transform cache is kept across calls).
    pub fn shared(dim: usize, m: f64) -> Arc<MollifierKernel> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<MollifierKernel>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("kernel cache poisoned");
        guard
            .entry((dim, m.to_bits()))
            .or_insert_with(|| Arc::new(MollifierKernel::new(dim, m)))
            .clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.m
    }

    pub fn support_radius(&self) -> f64 {
        PROFILE_RADIUS / self.m
    }

    /// `ρ_m` as a function of `|z|^2`.
    #[inline]
    pub fn value_r2(&self, r2: f64) -> f64 {
        let m = self.m;
        m.powi(self.dim as i32) * self.norm * bump_r2(m * m * r2)
    }

    #[inline]
    pub fn value(&self, z: &[f64]) -> f64 {
        self.value_r2(z.iter().map(|v| v * v).sum())
    }

    /// Radial derivative `d/dr ρ_m(r)`.
    #[inline]
    pub fn radial_derivative(&self, r: f64) -> f64 {
        let m = self.m;
        let y = m * r;
        let s = 0.25 * y * y;
        if s >= 1.0 {
            return 0.0;
        }
        // d/dy exp(-1/(1-y^2/4)) = -exp(..) * y / (2 (1-s)^2)
        let base = (-1.0 / (1.0 - s)).exp();
        m.powi(self.dim as i32 + 1) * self.norm * (-base * y / (2.0 * (1.0 - s) * (1.0 - s)))
    }

    /// Gradient `∇ρ_m(z)`.
    pub fn gradient(&self, z: &[f64], out: &mut [f64]) {
        let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            out[..z.len()].fill(0.0);
            return;
        }
        let g = self.radial_derivative(r) / r;
        for (o, v) in out.iter_mut().zip(z) {
            *o = g * v;
        }
    }

    /// `∫ ρ_m`, evaluated by radial quadrature (should be 1).
    pub fn mass(&self) -> f64 {
        let d = self.dim;
        sphere_area(d)
            * integrate(
                |r| self.value_r2(r * r) * r.powi(d as i32 - 1),
                0.0,
                self.support_radius(),
                64,
                16,
            )
    }

    /// Fourier transform `ρ̂_m(ξ) = ∫ ρ_m(z) e^{-iξ·z} dz` at `|ξ| = xi` (real, radial).
    pub fn transform(&self, xi: f64) -> f64 {
        let key = xi.to_bits();
        if let Some(v) = self.transform.lock().expect("cache").get(&key) {
            return *v;
        }
        let v = profile_transform(self.dim, xi / self.m);
        self.transform.lock().expect("cache").insert(key, v);
        v
    }
}

fn profile_normaliser(dim: usize) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<usize, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    *cache.lock().expect("cache").entry(dim).or_insert_with(|| {
        let mass = if dim == 1 {
            2.0 * integrate(|r| bump_r2(r * r), 0.0, PROFILE_RADIUS, 64, 16)
        } else {
            sphere_area(dim)
                * integrate(
                    |r| bump_r2(r * r) * r.powi(dim as i32 - 1),
                    0.0,
                    PROFILE_RADIUS,
                    64,
                    16,
                )
        };
        1.0 / mass
    })
}

/// Transform of the unit-scale profile at frequency magnitude `xi`.
fn profile_transform(dim: usize, xi: f64) -> f64 {
    let c = profile_normaliser(dim);
    if dim == 1 {
        return 2.0 * c * integrate(|r| bump_r2(r * r) * (xi * r).cos(), 0.0, PROFILE_RADIUS, 64, 16);
    }
    // |S^{d-2}| ∫ ρ(r) r^{d-1} ∫_0^π cos(ξ r cosθ) sin^{d-2}θ dθ dr
    let inner = |r: f64| {
        integrate(
            |th: f64| (xi * r * th.cos()).cos() * th.sin().powi(dim as i32 - 2),
            0.0,
            PI,
            16,
            16,
        )
    };
    let ring = if dim == 2 { 2.0 } else { sphere_area(dim - 1) };
    ring * c * integrate(
        |r| bump_r2(r * r) * r.powi(dim as i32 - 1) * inner(r),
        0.0,
        PROFILE_RADIUS,
        32,
        16,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_mass() {
        for d in 1..=4 {
            for m in [1.0, 4.0, 16.0] {
                let k = MollifierKernel::new(d, m);
                assert!((k.mass() - 1.0).abs() < 1e-8, "d={d} m={m}");
            }
        }
    }

    #[test]
    fn transform_at_zero_is_mass() {
        for d in 1..=3 {
            let k = MollifierKernel::new(d, 3.0);
            assert!((k.transform(0.0) - 1.0).abs() < 1e-10);
            assert!(k.transform(2.0) < 1.0);
        }
    }

    #[test]
    fn three_dim_transform_matches_sinc_form() {
        // in 3-D the angular integral is 2 sin(ξr)/(ξr)
        let xi = 1.7;
        let c = profile_normaliser(3);
        let direct = 4.0
            * PI
            * c
            * integrate(
                |r| bump_r2(r * r) * r * r * (xi * r).sin() / (xi * r),
                0.0,
                2.0,
                64,
                16,
            );
        assert!((profile_transform(3, xi) - direct).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let k = MollifierKernel::new(2, 2.0);
        let z = [0.3, -0.2];
        let mut g = [0.0; 2];
        k.gradient(&z, &mut g);
        let h = 1e-6;
        let fd = (k.value(&[z[0] + h, z[1]]) - k.value(&[z[0] - h, z[1]])) / (2.0 * h);
        assert!((g[0] - fd).abs() < 1e-6 * fd.abs().max(1.0));
    }
}
