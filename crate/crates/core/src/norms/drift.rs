//! Drift fields `b(t, x)` and the built-in catalog.

use std::fmt;
use std::sync::Arc;

use super::kernel::MollifierKernel;
use super::radial::RadialTable;
use crate::error::{Error, Result};
use crate::grid::interp::PointStencil;
use crate::grid::{min_image, Interpolation, PeriodicField, SpectralGrid, MAX_DIM};

/// Where a drift came from in the approximation scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lineage {
    Base,
    Mollified(u32),
    Truncated(f64),
}

impl fmt::Display for Lineage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lineage::Base => write!(f, "base"),
            Lineage::Mollified(m) => write!(f, "mollified({m})"),
            Lineage::Truncated(m) => write!(f, "truncated({m})"),
        }
    }
}

/// One real Fourier term `amp * cos(k·x + phase)` in component `comp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub comp: usize,
    pub amp: f64,
    pub k: [f64; MAX_DIM],
    pub phase: f64,
}

/// Factor of a separable trigonometric product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trig {
    One,
    Cos(f64),
    Sin(f64),
}

/// Expand `amp * Π_a factor_a(x_a)` into real Fourier terms of component `comp`.
pub fn separable(comp: usize, amp: f64, factors: &[Trig]) -> Vec<Mode> {
    use num_complex::Complex64;
    // product of complex exponentials: (coefficient, wavevector)
    let mut terms: Vec<(Complex64, [f64; MAX_DIM])> = vec![(Complex64::new(amp, 0.0), [0.0; MAX_DIM])];
    for (a, f) in factors.iter().enumerate() {
        let pieces: Vec<(Complex64, f64)> = match *f {
            Trig::One => vec![(Complex64::new(1.0, 0.0), 0.0)],
            Trig::Cos(k) => vec![(Complex64::new(0.5, 0.0), k), (Complex64::new(0.5, 0.0), -k)],
            Trig::Sin(k) => vec![(Complex64::new(0.0, -0.5), k), (Complex64::new(0.0, 0.5), -k)],
        };
        let mut next = Vec::with_capacity(terms.len() * pieces.len());
        for (c, kv) in &terms {
            for (pc, pk) in &pieces {
                let mut k2 = *kv;
                k2[a] += pk;
                next.push((c * pc, k2));
            }
        }
        terms = next;
    }
    // Σ c e^{ik·x} is real, so it equals Σ |c| cos(k·x + arg c)
    terms
        .into_iter()
        .filter(|(c, _)| c.norm() > 0.0)
        .map(|(c, k)| Mode {
            comp,
            amp: c.norm(),
            k,
            phase: c.arg(),
        })
        .collect()
}

type EvalFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

/// Time-dependent field on the grid: cubic (or linear) in space, linear in time.
#[derive(Debug, Clone)]
pub struct GridDrift {
    pub(crate) field: PeriodicField,
    pub(crate) jacobian: PeriodicField,
    pub(crate) interp: Interpolation,
}

impl GridDrift {
    /// Wrap a `d`-component grid field; its Jacobian comes from spectral differentiation.
    pub fn new(field: PeriodicField, interp: Interpolation) -> Self {
        let d = field.dim();
        assert_eq!(field.components(), d, "grid drift must have d components");
        let grid = field.grid();
        let mut jac = PeriodicField::zeros(d, field.n(), d * d, field.times().to_vec());
        for ti in 0..field.times().len() {
            for i in 0..d {
                let spec = grid.to_spectral(field.slice(ti, i));
                for j in 0..d {
                    let mut s = spec.clone();
                    grid.derivative_in_place(&mut s, j);
                    let (re, _) = grid.to_real(s);
                    jac.slice_mut(ti, i * d + j).copy_from_slice(&re);
                }
            }
        }
        Self {
            field,
            jacobian: jac,
            interp,
        }
    }

    pub fn field(&self) -> &PeriodicField {
        &self.field
    }

    /// Bracketing snapshot indices and the weight of the later one.
    fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let times = self.field.times();
        let nt = times.len();
        if nt == 1 || t <= times[0] {
            return (0, 0, 0.0);
        }
        if t >= times[nt - 1] {
            return (nt - 1, nt - 1, 0.0);
        }
        let hi = times.partition_point(|&s| s <= t).min(nt - 1);
        let lo = hi - 1;
        let w = (t - times[lo]) / (times[hi] - times[lo]);
        (lo, hi, w)
    }

    fn sample(&self, src: &PeriodicField, t: f64, x: &[f64], out: &mut [f64]) {
        let st = PointStencil::new(x, src.n(), self.interp);
        let (lo, hi, w) = self.bracket(t);
        for (c, o) in out.iter_mut().enumerate().take(src.components()) {
            let a = st.apply(src.slice(lo, c));
            *o = if w == 0.0 {
                a
            } else {
                (1.0 - w) * a + w * st.apply(src.slice(hi, c))
            };
        }
    }
}

#[derive(Clone)]
pub(crate) enum Kind {
    Zero,
    Constant([f64; MAX_DIM]),
    /// `A (x - c)`, evaluated without wrapping.
    Linear {
        a: Vec<f64>,
        center: [f64; MAX_DIM],
    },
    Modes(Arc<Vec<Mode>>),
    /// `χ(|y|) y / |y|^{1+γ}` with `y` the minimum image of `x - c`.
    Singular {
        gamma: f64,
        center: [f64; MAX_DIM],
    },
    /// `ψ(|y|) y/|y|` with tabulated profile.
    Radial {
        table: Arc<RadialTable>,
        center: [f64; MAX_DIM],
    },
    /// Generic mollification by tensor quadrature over the kernel support.
    Quadrature {
        base: Arc<DriftField>,
        nodes: Arc<Vec<f64>>,
        weights: Arc<Vec<f64>>,
        grad_weights: Arc<Vec<f64>>,
    },
    Truncated {
        base: Arc<DriftField>,
        m: f64,
    },
    Grid(Arc<GridDrift>),
    Custom {
        eval: Arc<EvalFn>,
        jacobian: Option<Arc<EvalFn>>,
    },
}

/// Vector field `b(t, x)` on the torus (or on `R^d` for the linear family).
#[derive(Clone)]
pub struct DriftField {
    pub(crate) dim: usize,
    pub(crate) kind: Kind,
    pub(crate) lineage: Lineage,
    pub(crate) smooth: bool,
    pub(crate) divergence_free: bool,
    pub(crate) label: String,
}

impl fmt::Debug for DriftField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("lineage", &self.lineage)
            .finish()
    }
}

/// Default center of the singular family: the middle of the torus.
pub fn torus_center(dim: usize) -> [f64; MAX_DIM] {
    let mut c = [0.0; MAX_DIM];
    c[..dim].fill(std::f64::consts::PI);
    c
}

#[inline]
fn cutoff_psi(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

#[inline]
fn cutoff_dpsi(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp() / (s * s)
    }
}

/// Smooth cutoff equal to 1 on `r <= 1` and 0 on `r >= 2`, with its derivative.
#[inline]
pub fn cutoff(r: f64) -> (f64, f64) {
    if r <= 1.0 {
        return (1.0, 0.0);
    }
    if r >= 2.0 {
        return (0.0, 0.0);
    }
    let a = cutoff_psi(2.0 - r);
    let b = cutoff_psi(r - 1.0);
    let da = -cutoff_dpsi(2.0 - r);
    let db = cutoff_dpsi(r - 1.0);
    let s = a + b;
    (a / s, (da * b - a * db) / (s * s))
}

/// Radial profile `χ(r) r^{-γ}` of the singular family and its derivative.
#[inline]
pub fn singular_profile(gamma: f64, r: f64) -> (f64, f64) {
    if r <= 0.0 || r >= 2.0 {
        return (0.0, 0.0);
    }
    let (c, dc) = cutoff(r);
    let p = r.powf(-gamma);
    (c * p, dc * p - gamma * c * p / r)
}

/// Jacobian of `ψ(r) y/r`: `ψ' ŷŷᵀ + (ψ/r)(I - ŷŷᵀ)`.
#[inline]
fn radial_jacobian(y: &[f64], r: f64, psi: f64, dpsi: f64, jac: &mut [f64]) {
    let d = y.len();
    let iso = psi / r;
    for i in 0..d {
        for j in 0..d {
            let yy = y[i] * y[j] / (r * r);
            jac[i * d + j] = dpsi * yy + iso * (if i == j { 1.0 } else { 0.0 } - yy);
        }
    }
}

impl DriftField {
    fn build(dim: usize, kind: Kind, smooth: bool, label: impl Into<String>) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        Self {
            dim,
            kind,
            lineage: Lineage::Base,
            smooth,
            divergence_free: false,
            label: label.into(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        let mut b = Self::build(dim, Kind::Zero, true, "zero");
        b.divergence_free = true;
        b
    }

    pub fn constant(v: &[f64]) -> Self {
        let mut c = [0.0; MAX_DIM];
        c[..v.len()].copy_from_slice(v);
        let mut b = Self::build(v.len(), Kind::Constant(c), true, "constant");
        b.divergence_free = true;
        b
    }

    /// `b(x) = A x` with `A` row-major `d × d`.
    pub fn linear(a: &[f64], dim: usize) -> Self {
        assert_eq!(a.len(), dim * dim);
        Self::build(
            dim,
            Kind::Linear {
                a: a.to_vec(),
                center: [0.0; MAX_DIM],
            },
            true,
            "linear",
        )
    }

    /// Ornstein-Uhlenbeck drift `-rate (x - center)` on `R^d`.
    pub fn ornstein_uhlenbeck(dim: usize, rate: f64, center: &[f64]) -> Self {
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            a[i * dim + i] = -rate;
        }
        let mut c = [0.0; MAX_DIM];
        c[..dim].copy_from_slice(&center[..dim]);
        Self::build(dim, Kind::Linear { a, center: c }, true, "ou")
    }

    /// Sum of real Fourier terms.
    pub fn modes(dim: usize, modes: Vec<Mode>, label: impl Into<String>) -> Self {
        assert!(modes.iter().all(|m| m.comp < dim));
        Self::build(dim, Kind::Modes(Arc::new(modes)), true, label)
    }

    /// Divergence-free shear `b = (amp sin(x_1), 0, …)`.
    pub fn shear(dim: usize, amp: f64) -> Self {
        assert!(dim >= 2);
        let mut f = vec![Trig::One; dim];
        f[1] = Trig::Sin(1.0);
        let mut b = Self::modes(dim, separable(0, amp, &f), "shear");
        b.divergence_free = true;
        b
    }

    /// Taylor-Green vortex scaled by `amp`:
    /// 2-D `(cos x sin y, -sin x cos y)`, 3-D `(cos x sin y cos z, -sin x cos y cos z, 0)`.
    pub fn taylor_green(dim: usize, amp: f64) -> Self {
        assert!(dim == 2 || dim == 3, "Taylor-Green is defined for d = 2, 3");
        let mut f0 = vec![Trig::Cos(1.0), Trig::Sin(1.0)];
        let mut f1 = vec![Trig::Sin(1.0), Trig::Cos(1.0)];
        if dim == 3 {
            f0.push(Trig::Cos(1.0));
            f1.push(Trig::Cos(1.0));
        }
        let mut modes = separable(0, amp, &f0);
        modes.extend(separable(1, -amp, &f1));
        let mut b = Self::modes(dim, modes, "taylor_green");
        b.divergence_free = true;
        b
    }

    /// Compactly supported singular field `χ(|y|) y/|y|^{1+γ}` centred at the middle of the torus.
    pub fn singular(dim: usize, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Domain(format!("singular exponent γ = {gamma} must lie in (0, 1)")));
        }
        Ok(Self::build(
            dim,
            Kind::Singular {
                gamma,
                center: torus_center(dim),
            },
            false,
            format!("singular(gamma={gamma})"),
        ))
    }

    /// Velocity sampled on a grid (`d` components, any number of time samples).
    pub fn grid(field: PeriodicField, interp: Interpolation) -> Self {
        let dim = field.dim();
        Self::build(dim, Kind::Grid(Arc::new(GridDrift::new(field, interp))), true, "grid")
    }

    /// Drift from closures; `jacobian` writes `jac[i*d + j] = ∂_j b_i`.
    pub fn custom<F>(dim: usize, eval: F, label: impl Into<String>) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::build(
            dim,
            Kind::Custom {
                eval: Arc::new(eval),
                jacobian: None,
            },
            false,
            label,
        )
    }

    pub fn with_jacobian<G>(mut self, jac: G) -> Self
    where
        G: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if let Kind::Custom { jacobian, .. } = &mut self.kind {
            *jacobian = Some(Arc::new(jac));
            self.smooth = true;
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lineage(&self) -> Lineage {
        self.lineage
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    pub fn divergence_free(&self) -> bool {
        self.divergence_free
    }

    /// Whether `b` depends on `t`.
    pub fn time_dependent(&self) -> bool {
        match &self.kind {
            Kind::Grid(g) => g.field.times().len() > 1,
            Kind::Custom { .. } => true,
            Kind::Quadrature { base, .. } | Kind::Truncated { base, .. } => base.time_dependent(),
            _ => false,
        }
    }

    pub fn has_gradient(&self) -> bool {
        match &self.kind {
            Kind::Truncated { .. } => false,
            Kind::Custom { jacobian, .. } => jacobian.is_some(),
            _ => true,
        }
    }

    /// Capability check used by derivative operations.
    pub fn require_gradient(&self) -> Result<()> {
        if self.has_gradient() {
            Ok(())
        } else {
            Err(Error::Capability(format!("drift `{}` has no spatial gradient", self.label)))
        }
    }

    /// Singularity center and exponent for the singular family and its mollifications.
    pub fn singular_parameters(&self) -> Option<(f64, [f64; MAX_DIM])> {
        match &self.kind {
            Kind::Singular { gamma, center } => Some((*gamma, *center)),
            Kind::Radial { table, center } => Some((table.gamma(), *center)),
            _ => None,
        }
    }

    /// `b(t, x)` written into `out[..d]`.
    #[inline]
    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        match &self.kind {
            Kind::Zero => out[..d].fill(0.0),
            Kind::Constant(c) => out[..d].copy_from_slice(&c[..d]),
            Kind::Linear { a, center } => {
                for i in 0..d {
                    let mut s = 0.0;
                    for j in 0..d {
                        s += a[i * d + j] * (x[j] - center[j]);
                    }
                    out[i] = s;
                }
            }
            Kind::Modes(modes) => {
                out[..d].fill(0.0);
                for m in modes.iter() {
                    let mut ph = m.phase;
                    for a in 0..d {
                        ph += m.k[a] * x[a];
                    }
                    out[m.comp] += m.amp * ph.cos();
                }
            }
            Kind::Singular { gamma, center } => {
                let mut y = [0.0; MAX_DIM];
                let mut r2 = 0.0;
                for a in 0..d {
                    y[a] = min_image(x[a] - center[a]);
                    r2 += y[a] * y[a];
                }
                let r = r2.sqrt();
                let (p, _) = singular_profile(*gamma, r);
                let s = if r > 0.0 { p / r } else { 0.0 };
                for a in 0..d {
                    out[a] = s * y[a];
                }
            }
            Kind::Radial { table, center } => {
                let mut y = [0.0; MAX_DIM];
                let mut r2 = 0.0;
                for a in 0..d {
                    y[a] = min_image(x[a] - center[a]);
                    r2 += y[a] * y[a];
                }
                let r = r2.sqrt();
                let s = table.ratio(r);
                for a in 0..d {
                    out[a] = s * y[a];
                }
            }
            Kind::Quadrature {
                base,
                nodes,
                weights,
                ..
            } => {
                out[..d].fill(0.0);
                let mut xz = [0.0; MAX_DIM];
                let mut v = [0.0; MAX_DIM];
                for (q, w) in weights.iter().enumerate() {
                    for a in 0..d {
                        xz[a] = x[a] - nodes[q * d + a];
                    }
                    base.eval(t, &xz[..d], &mut v);
                    for a in 0..d {
                        out[a] += w * v[a];
                    }
                }
            }
            Kind::Truncated { base, m } => {
                base.eval(t, x, out);
                let n2: f64 = out[..d].iter().map(|v| v * v).sum();
                if n2.sqrt() > *m {
                    out[..d].fill(0.0);
                }
            }
            Kind::Grid(g) => g.sample(&g.field, t, x, out),
            Kind::Custom { eval, .. } => eval(t, x, out),
        }
    }

    /// Jacobian `jac[i*d + j] = ∂_j b_i(t, x)`. Call [`require_gradient`](Self::require_gradient) first;
    /// drifts without a gradient leave `jac` zeroed.
    #[inline]
    pub fn jacobian(&self, t: f64, x: &[f64], jac: &mut [f64]) {
        let d = self.dim;
        let dd = d * d;
        match &self.kind {
            Kind::Zero | Kind::Constant(_) | Kind::Truncated { .. } => jac[..dd].fill(0.0),
            Kind::Linear { a, .. } => jac[..dd].copy_from_slice(a),
            Kind::Modes(modes) => {
                jac[..dd].fill(0.0);
                for m in modes.iter() {
                    let mut ph = m.phase;
                    for a in 0..d {
                        ph += m.k[a] * x[a];
                    }
                    let s = -m.amp * ph.sin();
                    for a in 0..d {
                        jac[m.comp * d + a] += s * m.k[a];
                    }
                }
            }
            Kind::Singular { gamma, center } => {
                let mut y = [0.0; MAX_DIM];
                let mut r2 = 0.0;
                for a in 0..d {
                    y[a] = min_image(x[a] - center[a]);
                    r2 += y[a] * y[a];
                }
                let r = r2.sqrt();
                if r == 0.0 || r >= 2.0 {
                    jac[..dd].fill(0.0);
                } else {
                    let (p, dp) = singular_profile(*gamma, r);
                    radial_jacobian(&y[..d], r, p, dp, jac);
                }
            }
            Kind::Radial { table, center } => {
                let mut y = [0.0; MAX_DIM];
                let mut r2 = 0.0;
                for a in 0..d {
                    y[a] = min_image(x[a] - center[a]);
                    r2 += y[a] * y[a];
                }
                let r = r2.sqrt();
                if r < table.small_radius() {
                    let g = table.slope_at_origin();
                    jac[..dd].fill(0.0);
                    for i in 0..d {
                        jac[i * d + i] = g;
                    }
                } else {
                    let (p, dp) = table.value(r);
                    radial_jacobian(&y[..d], r, p, dp, jac);
                }
            }
            Kind::Quadrature {
                base,
                nodes,
                grad_weights,
                ..
            } => {
                jac[..dd].fill(0.0);
                let mut xz = [0.0; MAX_DIM];
                let mut v = [0.0; MAX_DIM];
                let nq = grad_weights.len() / d;
                for q in 0..nq {
                    for a in 0..d {
                        xz[a] = x[a] - nodes[q * d + a];
                    }
                    base.eval(t, &xz[..d], &mut v);
                    for i in 0..d {
                        for j in 0..d {
                            jac[i * d + j] += grad_weights[q * d + j] * v[i];
                        }
                    }
                }
            }
            Kind::Grid(g) => g.sample(&g.jacobian, t, x, jac),
            Kind::Custom { jacobian, .. } => match jacobian {
                Some(f) => f(t, x, jac),
                None => jac[..dd].fill(0.0),
            },
        }
    }

    /// Sample all components at time `t` on an `n^d` grid (component-major).
    pub fn sample(&self, t: f64, n: usize) -> PeriodicField {
        let d = self.dim;
        PeriodicField::sample(d, n, d, vec![t], |t, x, out| self.eval(t, x, out))
    }

    /// Sample on a grid at several times.
    pub fn sample_times(&self, times: &[f64], n: usize) -> PeriodicField {
        let d = self.dim;
        PeriodicField::sample(d, n, d, times.to_vec(), |t, x, out| self.eval(t, x, out))
    }

    /// Largest sampled `|b|` on an `n^d` grid at the given times.
    pub fn sup_norm(&self, times: &[f64], n: usize) -> f64 {
        let f = self.sample_times(times, n).magnitude();
        f.values().iter().cloned().fold(0.0, f64::max)
    }

    /// Spectral divergence relative to the Jacobian size, sampled at time `t`.
    pub fn divergence_ratio(&self, t: f64, n: usize) -> f64 {
        let f = self.sample(t, n);
        divergence_ratio(&f, 0)
    }

    /// Set the divergence-free flag if the spectral divergence on an `n^d` grid is below `1e-10` relative.
    pub fn certify_divergence_free(mut self, t: f64, n: usize) -> Result<Self> {
        let ratio = self.divergence_ratio(t, n);
        if ratio <= 1e-10 {
            self.divergence_free = true;
            Ok(self)
        } else {
            Err(Error::Data(format!(
                "drift `{}` is not divergence free: relative divergence {ratio:.3e}",
                self.label
            )))
        }
    }
}

/// `‖div F‖_{L²} / ‖∇F‖_{L²}` for snapshot `ti` of a vector field (0 for constant fields).
pub fn divergence_ratio(field: &PeriodicField, ti: usize) -> f64 {
    let d = field.dim();
    let grid = SpectralGrid::shared(d, field.n());
    let len = grid.len();
    let mut div = vec![0.0; len];
    let mut grad2 = 0.0;
    for i in 0..d {
        let spec = grid.to_spectral(field.slice(ti, i));
        for j in 0..d {
            let mut s = spec.clone();
            grid.derivative_in_place(&mut s, j);
            let (re, _) = grid.to_real(s);
            grad2 += re.iter().map(|v| v * v).sum::<f64>();
            if i == j {
                for (a, b) in div.iter_mut().zip(&re) {
                    *a += b;
                }
            }
        }
    }
    let div2: f64 = div.iter().map(|v| v * v).sum();
    if grad2 == 0.0 {
        div2.sqrt()
    } else {
        (div2 / grad2).sqrt()
    }
}

/// Quadrature nodes over the kernel support with value and gradient weights.
///
/// Polar (2-D) and spherical (3-D) product rules: Gauss-Legendre in the radius
/// (and in `cos θ`), trapezoid in the periodic angle. Other dimensions fall
/// back to a tensor Gauss-Legendre rule on the enclosing cube. `order` sets the
/// radial node count.
pub(crate) fn kernel_quadrature(kernel: &MollifierKernel, order: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let d = kernel.dim();
    let big_r = kernel.support_radius();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut grads = Vec::new();
    let mut push = |z: &[f64], w: f64| {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        let v = kernel.value_r2(r2);
        if v == 0.0 {
            return;
        }
        let mut g = [0.0; MAX_DIM];
        kernel.gradient(z, &mut g);
        nodes.extend_from_slice(z);
        weights.push(w * v);
        grads.extend(g[..z.len()].iter().map(|gv| w * gv));
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    let (rs, rw) = {
        let (a, wa) = crate::quadrature::gauss_legendre(order, 0.0, 0.5 * big_r);
        let (b, wb) = crate::quadrature::gauss_legendre(order, 0.5 * big_r, big_r);
        (
            a.into_iter().chain(b).collect::<Vec<_>>(),
            wa.into_iter().chain(wb).collect::<Vec<_>>(),
        )
    };
    match d {
        2 => {
            let na = 4 * order;
            for (r, w) in rs.iter().zip(&rw) {
                for j in 0..na {
                    let th = two_pi * j as f64 / na as f64;
                    push(&[r * th.cos(), r * th.sin()], w * r * two_pi / na as f64);
                }
            }
        }
        3 => {
            let (cs, cw) = crate::quadrature::gauss_legendre(order, -1.0, 1.0);
            let na = 2 * order;
            for (r, w) in rs.iter().zip(&rw) {
                for (c, wc) in cs.iter().zip(&cw) {
                    let sn = (1.0 - c * c).sqrt();
                    for j in 0..na {
                        let ph = two_pi * j as f64 / na as f64;
                        push(
                            &[r * sn * ph.cos(), r * sn * ph.sin(), r * c],
                            w * r * r * wc * two_pi / na as f64,
                        );
                    }
                }
            }
        }
        _ => {
            let (h1, w1) = crate::quadrature::gauss_legendre(order, -big_r, 0.0);
            let (h2, w2) = crate::quadrature::gauss_legendre(order, 0.0, big_r);
            let xs: Vec<f64> = h1.into_iter().chain(h2).collect();
            let ws: Vec<f64> = w1.into_iter().chain(w2).collect();
            let n1 = xs.len();
            let mut z = [0.0; MAX_DIM];
            for t in 0..n1.pow(d as u32) {
                let mut rem = t;
                let mut w = 1.0;
                for a in (0..d).rev() {
                    let i = rem % n1;
                    rem /= n1;
                    z[a] = xs[i];
                    w *= ws[i];
                }
                push(&z[..d], w);
            }
        }
    }
    (nodes, weights, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_expansion_matches_product() {
        let modes = separable(0, 2.0, &[Trig::Cos(1.0), Trig::Sin(2.0), Trig::Cos(1.0)]);
        let b = DriftField::modes(3, modes, "t");
        let x = [0.3, 1.1, -0.7];
        let mut out = [0.0; 3];
        b.eval(0.0, &x, &mut out);
        let exact = 2.0 * x[0].cos() * (2.0 * x[1]).sin() * x[2].cos();
        assert!((out[0] - exact).abs() < 1e-14);
    }

    #[test]
    fn taylor_green_values_and_divergence() {
        for d in [2, 3] {
            let b = DriftField::taylor_green(d, 1.0);
            assert!(b.divergence_ratio(0.0, 16) < 1e-12);
            let x = [0.4, 1.3, 2.2];
            let mut out = [0.0; 3];
            b.eval(0.0, &x[..d], &mut out);
            let z = if d == 3 { x[2].cos() } else { 1.0 };
            assert!((out[0] - x[0].cos() * x[1].sin() * z).abs() < 1e-14);
            assert!((out[1] + x[0].sin() * x[1].cos() * z).abs() < 1e-14);
        }
        let ou = DriftField::ornstein_uhlenbeck(2, 1.0, &[0.0, 0.0]);
        assert!(ou.clone().certify_divergence_free(0.0, 16).is_err());
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let cases = vec![
            DriftField::taylor_green(3, 0.7),
            DriftField::singular(3, 0.5).unwrap(),
            DriftField::linear(&[0.0, 1.0, -1.0, 0.5], 2),
        ];
        for b in cases {
            let d = b.dim();
            let x = [2.6, 3.5, 3.9];
            let mut jac = [0.0; 16];
            b.jacobian(0.0, &x[..d], &mut jac);
            let h = 1e-6;
            for j in 0..d {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let mut bp = [0.0; 4];
                let mut bm = [0.0; 4];
                b.eval(0.0, &xp[..d], &mut bp);
                b.eval(0.0, &xm[..d], &mut bm);
                for i in 0..d {
                    let fd = (bp[i] - bm[i]) / (2.0 * h);
                    assert!((jac[i * d + j] - fd).abs() < 1e-6, "{} {i}{j}", b.label());
                }
            }
        }
    }

    #[test]
    fn cutoff_is_smooth_partition() {
        assert_eq!(cutoff(0.5).0, 1.0);
        assert_eq!(cutoff(2.5).0, 0.0);
        assert!((cutoff(1.5).0 - 0.5).abs() < 1e-14);
        let h = 1e-6;
        let fd = (cutoff(1.3 + h).0 - cutoff(1.3 - h).0) / (2.0 * h);
        assert!((cutoff(1.3).1 - fd).abs() < 1e-6);
    }
}
