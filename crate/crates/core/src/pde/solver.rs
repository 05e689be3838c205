//! Spectral solver for `∂_t u + ½Δu + b·∇u + g = 0` (backward) and
//! `∂_t u = ½Δu + b·∇u + f` (forward), optionally with a zero-order term.
//!
//! Both directions march a variable `v(τ)` from `v(0) = 0`:
//! `∂_τ v = ½Δv - λv + b·∇v + g`, with `t = S1 - τ` (backward) or
//! `t = S0 + τ` (forward). Time stepping is ETD2RK: the diffusion and
//! zero-order part is integrated exactly per mode, transport and forcing
//! explicitly.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::euler::steps_between;
use crate::grid::{PeriodicField, SpectralGrid};
use crate::norms::{DriftField, ScalarFn};

/// Explicit transport must satisfy `max|b|·dt <= CFL_FRACTION · h`.
pub const CFL_FRACTION: f64 = 0.5;

/// Right-hand side `g(t, x)` of the equation.
#[derive(Debug, Clone)]
pub enum Forcing {
    Zero,
    Scalar(ScalarFn),
    /// `∂_axis f`.
    Partial(ScalarFn, usize),
    /// Grid samples, linear in time between stored snapshots.
    Field(PeriodicField),
}

impl Forcing {
    fn is_time_dependent(&self) -> bool {
        matches!(self, Forcing::Field(f) if f.times().len() > 1)
    }

    fn sample(&self, grid: &SpectralGrid, t: f64) -> Vec<f64> {
        match self {
            Forcing::Zero => vec![0.0; grid.len()],
            Forcing::Scalar(f) => grid.sample(|x| f.eval(x)),
            Forcing::Partial(f, a) => grid.sample(|x| f.partial(x, *a)),
            Forcing::Field(field) => {
                let times = field.times();
                let nt = times.len();
                if nt == 1 {
                    return field.slice(0, 0).to_vec();
                }
                let tol = 1e-9 * (1.0 + t.abs());
                let hi = times.partition_point(|&s| s < t - tol).clamp(1, nt - 1);
                let lo = hi - 1;
                let w = ((t - times[lo]) / (times[hi] - times[lo])).clamp(0.0, 1.0);
                if (t - times[hi]).abs() <= tol {
                    return field.slice(hi, 0).to_vec();
                }
                if (t - times[lo]).abs() <= tol {
                    return field.slice(lo, 0).to_vec();
                }
                field
                    .slice(lo, 0)
                    .iter()
                    .zip(field.slice(hi, 0))
                    .map(|(a, b)| (1.0 - w) * a + w * b)
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Terminal value `u(S1) = 0`.
    Backward,
    /// Initial value `u(S0) = 0`.
    Forward,
}

/// One Kolmogorov solve.
#[derive(Debug, Clone)]
pub struct KolmogorovProblem {
    pub drift: DriftField,
    pub forcing: Forcing,
    pub s0: f64,
    pub s1: f64,
    pub n: usize,
    pub dt: f64,
    pub direction: Direction,
    /// Zero-order coefficient `λ >= 0` (term `-λu` on the right-hand side).
    pub zero_order: f64,
    /// Keep every `record_every`-th step (endpoints are always kept).
    pub record_every: usize,
}

impl KolmogorovProblem {
    pub fn backward(drift: DriftField, forcing: Forcing, s0: f64, s1: f64, n: usize, dt: f64) -> Self {
        Self {
            drift,
            forcing,
            s0,
            s1,
            n,
            dt,
            direction: Direction::Backward,
            zero_order: 0.0,
            record_every: 1,
        }
    }

    pub fn forward(drift: DriftField, forcing: Forcing, s0: f64, s1: f64, n: usize, dt: f64) -> Self {
        Self {
            direction: Direction::Forward,
            ..Self::backward(drift, forcing, s0, s1, n, dt)
        }
    }

    pub fn with_record_every(mut self, k: usize) -> Self {
        self.record_every = k.max(1);
        self
    }

    pub fn with_zero_order(mut self, lambda: f64) -> Self {
        self.zero_order = lambda;
        self
    }

    fn physical_time(&self, tau: f64) -> f64 {
        match self.direction {
            Direction::Backward => self.s1 - tau,
            Direction::Forward => self.s0 + tau,
        }
    }
}

/// Solution of a Kolmogorov problem with the fields needed for norm tables.
#[derive(Debug, Clone)]
pub struct PdeSolveReport {
    /// `u` at the recorded times (ascending physical time).
    pub solution: PeriodicField,
    /// `∂_t u` at the same times (evaluated from the equation).
    pub time_derivative: PeriodicField,
    /// Forcing samples at the same times.
    pub forcing: PeriodicField,
    pub dt: f64,
    pub n: usize,
    pub max_drift: f64,
}

#[inline]
pub(crate) fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0
    } else {
        z.exp_m1() / z
    }
}

#[inline]
pub(crate) fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

struct Transport<'a> {
    grid: &'a SpectralGrid,
    dim: usize,
}

impl Transport<'_> {
    /// Spectrum of `b·∇v + g` for real-space `b` (component-major) and `g`.
    fn eval(&self, v_hat: &[Complex64], b: Option<&[f64]>, g: &[f64]) -> Vec<Complex64> {
        let len = self.grid.len();
        let mut acc: Vec<f64> = g.to_vec();
        if let Some(b) = b {
            for a in 0..self.dim {
                let mut s = v_hat.to_vec();
                self.grid.derivative_in_place(&mut s, a);
                let (dv, _) = self.grid.to_real(s);
                let ba = &b[a * len..(a + 1) * len];
                for i in 0..len {
                    acc[i] += ba[i] * dv[i];
                }
            }
        }
        self.grid.to_spectral(&acc)
    }
}

/// Solve a Kolmogorov problem on the `n^d` torus grid.
pub fn solve_kolmogorov(problem: &KolmogorovProblem) -> Result<PdeSolveReport> {
    let d = problem.drift.dim();
    let steps = steps_between(problem.s0, problem.s1, problem.dt)?;
    if problem.zero_order < 0.0 {
        return Err(Error::Domain("zero-order coefficient must be nonnegative".into()));
    }
    let grid = SpectralGrid::shared(d, problem.n);
    let len = grid.len();
    let dt = problem.dt;
    let lam = problem.zero_order;
    let drift_dep = problem.drift.time_dependent();
    let force_dep = problem.forcing.is_time_dependent();
    let transport = !problem.drift.is_zero();

    let sample_b = |t: f64| -> Vec<f64> { problem.drift.sample(t, problem.n).values().to_vec() };
    let max_abs = |b: &[f64]| -> f64 {
        (0..len)
            .map(|i| (0..d).map(|a| b[a * len + i].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    };

    // CFL check over all sampled drift times
    let mut max_b: f64 = 0.0;
    let b_static = if transport && !drift_dep {
        let b = sample_b(problem.s0);
        max_b = max_abs(&b);
        Some(b)
    } else {
        if transport {
            for j in 0..=steps {
                max_b = max_b.max(max_abs(&sample_b(problem.physical_time(j as f64 * dt))));
            }
        }
        None
    };
    let h = grid.spacing();
    if max_b * dt > CFL_FRACTION * h {
        return Err(Error::Cfl {
            observed: max_b * dt,
            limit: CFL_FRACTION * h,
            required_dt: CFL_FRACTION * h / max_b,
        });
    }

    let lin: Vec<f64> = (0..len).map(|i| -0.5 * grid.k2(i) - lam).collect();
    let e1: Vec<f64> = lin.iter().map(|l| (l * dt).exp()).collect();
    let p1: Vec<f64> = lin.iter().map(|l| dt * phi1(l * dt)).collect();
    let p2: Vec<f64> = lin.iter().map(|l| dt * phi2(l * dt)).collect();
    let tr = Transport { grid: &grid, dim: d };

    let g_static = if force_dep {
        None
    } else {
        Some(problem.forcing.sample(&grid, problem.s0))
    };
    let b_at = |t: f64| -> Option<Vec<f64>> {
        if !transport {
            None
        } else if let Some(b) = &b_static {
            Some(b.clone())
        } else {
            Some(sample_b(t))
        }
    };
    let g_at = |t: f64| -> Vec<f64> {
        match &g_static {
            Some(g) => g.clone(),
            None => problem.forcing.sample(&grid, t),
        }
    };

    let mut v_hat = vec![Complex64::new(0.0, 0.0); len];
    let mut rec_tau: Vec<f64> = Vec::new();
    let mut rec_u: Vec<Vec<f64>> = Vec::new();
    let mut rec_du: Vec<Vec<f64>> = Vec::new();
    let mut rec_g: Vec<Vec<f64>> = Vec::new();

    let mut b_cur = b_at(problem.physical_time(0.0));
    let mut g_cur = g_at(problem.physical_time(0.0));
    let mut n_cur = tr.eval(&v_hat, b_cur.as_deref(), &g_cur);
    for j in 0..=steps {
        let tau = j as f64 * dt;
        if j % problem.record_every == 0 || j == steps {
            let (u, res) = grid.to_real(v_hat.clone());
            if res > 1e-8 || u.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("solution lost realness or finiteness at τ = {tau}")));
            }
            let dv: Vec<Complex64> = (0..len).map(|i| lin[i] * v_hat[i] + n_cur[i]).collect();
            let (mut du, _) = grid.to_real(dv);
            if problem.direction == Direction::Backward {
                for v in du.iter_mut() {
                    *v = -*v;
                }
            }
            rec_tau.push(tau);
            rec_u.push(u);
            rec_du.push(du);
            rec_g.push(g_cur.clone());
        }
        if j == steps {
            break;
        }
        let t_next = problem.physical_time(tau + dt);
        let a: Vec<Complex64> = (0..len).map(|i| e1[i] * v_hat[i] + p1[i] * n_cur[i]).collect();
        let b_next = if drift_dep { b_at(t_next) } else { b_cur.clone() };
        let g_next = if force_dep { g_at(t_next) } else { g_cur.clone() };
        let n_a = tr.eval(&a, b_next.as_deref(), &g_next);
        for i in 0..len {
            v_hat[i] = a[i] + p2[i] * (n_a[i] - n_cur[i]);
        }
        b_cur = b_next;
        g_cur = g_next;
        n_cur = tr.eval(&v_hat, b_cur.as_deref(), &g_cur);
    }

    // ascending physical time
    let order: Vec<usize> = match problem.direction {
        Direction::Forward => (0..rec_tau.len()).collect(),
        Direction::Backward => (0..rec_tau.len()).rev().collect(),
    };
    let times: Vec<f64> = order.iter().map(|&i| problem.physical_time(rec_tau[i])).collect();
    let pack = |rows: &Vec<Vec<f64>>| -> PeriodicField {
        let mut vals = Vec::with_capacity(rows.len() * len);
        for &i in &order {
            vals.extend_from_slice(&rows[i]);
        }
        PeriodicField::from_values(d, problem.n, 1, times.clone(), vals).expect("consistent shape")
    };
    Ok(PdeSolveReport {
        solution: pack(&rec_u),
        time_derivative: pack(&rec_du),
        forcing: pack(&rec_g),
        dt,
        n: problem.n,
        max_drift: max_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_forcing_gives_linear_profile() {
        let p = KolmogorovProblem::backward(DriftField::zero(2), Forcing::Scalar(ScalarFn::Constant(1.0)), 0.0, 0.5, 8, 0.01);
        let r = solve_kolmogorov(&p).unwrap();
        for (ti, t) in r.solution.times().iter().enumerate() {
            for v in r.solution.slice(ti, 0) {
                assert!((v - (0.5 - t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_mode_matches_oracle() {
        let k = [1.0, 2.0];
        let k2 = 5.0;
        let p = KolmogorovProblem::backward(DriftField::zero(2), Forcing::Scalar(ScalarFn::cosine(&k, 1.0)), 0.0, 1.0, 8, 0.01);
        let r = solve_kolmogorov(&p).unwrap();
        let grid = SpectralGrid::shared(2, 8);
        for (ti, t) in r.solution.times().iter().enumerate() {
            let c = 2.0 / k2 * (1.0 - (-k2 * (1.0 - t) / 2.0).exp());
            let exact = grid.sample(|x| c * (x[0] + 2.0 * x[1]).cos());
            for (a, b) in r.solution.slice(ti, 0).iter().zip(&exact) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_drift_mode_has_phase_shift() {
        // u = Re(c(t) e^{ik·x}), c' = (|k|²/2 - i k·v) c - 1, c(S1) = 0
        let v = [0.7, -0.3];
        let p = KolmogorovProblem::backward(DriftField::constant(&v), Forcing::Scalar(ScalarFn::cosine(&[1.0, 0.0], 1.0)), 0.0, 1.0, 8, 1e-3);
        let r = solve_kolmogorov(&p).unwrap();
        let rate = Complex64::new(0.5, -0.7);
        let grid = SpectralGrid::shared(2, 8);
        let c = |tau: f64| (Complex64::new(1.0, 0.0) - (-rate * tau).exp()) / rate;
        let exact = grid.sample(|x| (c(1.0) * Complex64::new(0.0, x[0]).exp()).re);
        for (a, b) in r.solution.slice(0, 0).iter().zip(&exact) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn cfl_violation_is_refused() {
        let p = KolmogorovProblem::backward(DriftField::constant(&[100.0, 0.0]), Forcing::Zero, 0.0, 1.0, 16, 0.01);
        match solve_kolmogorov(&p) {
            Err(Error::Cfl { required_dt, .. }) => assert!(required_dt < 0.01),
            other => panic!("{other:?}"),
        }
    }
}
