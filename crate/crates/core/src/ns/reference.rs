//! Pseudo-spectral backward Navier–Stokes solver used as an oracle.
//!
//! In reversed time `τ = -t` the system reads `∂_τ v = ½Δv + P[(v·∇)v]`,
//! `v(0) = Pφ`. Diffusion is integrated exactly and the projected, 2/3-rule
//! dealiased nonlinearity by second-order exponential Runge–Kutta.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::euler::steps_between;
use crate::grid::{PeriodicField, SpectralGrid};
use crate::pde::solver::{phi1, phi2};
use crate::pde::{high_frequency_fraction, RESOLUTION_WARNING};

use super::picard::VelocityState;
use super::spectral::{leray_project, project_spectrum};

/// Reference trajectory with its discrete energy-budget diagnostics.
#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub state: VelocityState,
    /// Largest per-step relative mismatch of `d/dτ ‖v‖² = -‖∇v‖²` (trapezoidal in time).
    pub energy_residual: f64,
    /// Largest fraction of spectral energy beyond `n/3`.
    pub high_frequency: f64,
    pub warning: bool,
}

type Spectrum = Vec<Vec<Complex64>>;

struct Stepper {
    grid: std::sync::Arc<SpectralGrid>,
    keep: Vec<bool>,
}

impl Stepper {
    fn new(grid: std::sync::Arc<SpectralGrid>) -> Self {
        let cut = grid.n() as f64 / 3.0;
        let keep = (0..grid.len())
            .map(|i| grid.kvec(i).iter().all(|k| k.abs() < cut))
            .collect();
        Self { grid, keep }
    }

    /// `P[(v·∇)v]`, dealiased, with the mean mode set to zero.
    fn nonlinear(&self, v: &Spectrum) -> Spectrum {
        let g = &self.grid;
        let d = g.dim();
        let real: Vec<Vec<f64>> = v.par_iter().map(|s| g.to_real(s.clone()).0).collect();
        let grads: Vec<Vec<Vec<f64>>> = v
            .par_iter()
            .map(|s| {
                (0..d)
                    .map(|a| {
                        let mut t = s.clone();
                        g.derivative_in_place(&mut t, a);
                        g.to_real(t).0
                    })
                    .collect()
            })
            .collect();
        let mut out: Spectrum = (0..d)
            .into_par_iter()
            .map(|i| {
                let adv: Vec<f64> = (0..g.len())
                    .map(|node| (0..d).map(|a| real[a][node] * grads[i][a][node]).sum())
                    .collect();
                let mut s = g.to_spectral(&adv);
                for (c, &k) in s.iter_mut().zip(&self.keep) {
                    if !k {
                        *c = Complex64::new(0.0, 0.0);
                    }
                }
                s[0] = Complex64::new(0.0, 0.0);
                s
            })
            .collect();
        project_spectrum(g, &mut out);
        out
    }

    fn step(&self, v: &Spectrum, h: f64) -> Spectrum {
        let g = &self.grid;
        let n0 = self.nonlinear(v);
        let a: Spectrum = v
            .iter()
            .zip(&n0)
            .map(|(vc, nc)| {
                (0..g.len())
                    .map(|i| {
                        let z = -0.5 * g.k2(i) * h;
                        z.exp() * vc[i] + h * phi1(z) * nc[i]
                    })
                    .collect()
            })
            .collect();
        let n1 = self.nonlinear(&a);
        a.iter()
            .zip(n0.iter().zip(&n1))
            .map(|(ac, (p, q))| {
                (0..g.len())
                    .map(|i| {
                        let z = -0.5 * g.k2(i) * h;
                        ac[i] + h * phi2(z) * (q[i] - p[i])
                    })
                    .collect()
            })
            .collect()
    }

    /// `(‖v‖², ‖∇v‖²)` from the spectrum.
    fn energies(&self, v: &Spectrum) -> (f64, f64) {
        let g = &self.grid;
        let (mut e, mut dis) = (0.0, 0.0);
        for s in v {
            let r = g.to_real(s.clone()).0;
            e += g.l2_norm(&r).powi(2);
            for a in 0..g.dim() {
                dis += g.l2_norm(&g.derivative(&r, a)).powi(2);
            }
        }
        (e, dis)
    }
}

/// Solve on `[-T, 0]` with step `dt`, storing every `record_every`-th step.
pub fn reference_spectral_ns(
    phi: &PeriodicField,
    horizon: f64,
    n: usize,
    dt: f64,
    record_every: usize,
) -> Result<ReferenceRun> {
    let d = phi.dim();
    if !(2..=3).contains(&d) || phi.components() != d || phi.n() != n {
        return Err(Error::Domain("reference solver needs a d-component datum on the configured grid".into()));
    }
    if record_every == 0 {
        return Err(Error::Domain("record_every must be positive".into()));
    }
    let steps = steps_between(0.0, horizon, dt)?;
    if steps % record_every != 0 {
        return Err(Error::Domain("record_every must divide the step count".into()));
    }
    let p0 = leray_project(&phi.at(0));
    let grid = p0.grid();
    let stepper = Stepper::new(grid.clone());
    let mut v: Spectrum = (0..d).map(|c| grid.to_spectral(p0.slice(0, c))).collect();
    let mut snaps: Vec<(f64, Vec<f64>)> = Vec::new();
    let to_real = |v: &Spectrum| -> Vec<f64> { v.iter().flat_map(|s| grid.to_real(s.clone()).0).collect() };
    snaps.push((0.0, p0.snapshot(0).to_vec()));
    let (mut e_prev, mut dis_prev) = stepper.energies(&v);
    let mut energy_residual: f64 = 0.0;
    for k in 1..=steps {
        v = stepper.step(&v, dt);
        let (e, dis) = stepper.energies(&v);
        let lhs = (e - e_prev) / dt;
        let rhs = -0.5 * (dis + dis_prev);
        if rhs.abs() > 0.0 {
            energy_residual = energy_residual.max((lhs - rhs).abs() / rhs.abs());
        }
        e_prev = e;
        dis_prev = dis;
        if k % record_every == 0 {
            snaps.push((-(k as f64) * dt, to_real(&v)));
        }
    }
    snaps.reverse();
    let times: Vec<f64> = snaps.iter().map(|s| if s.0 == 0.0 { 0.0 } else { s.0 }).collect();
    let mut field = PeriodicField::zeros(d, n, d, Vec::new());
    for (t, s) in &snaps {
        field.push(*t, s);
    }
    let high_frequency = high_frequency_fraction(&field);
    let mut state = VelocityState::frozen(phi, times);
    state.field = field;
    Ok(ReferenceRun {
        state,
        energy_residual,
        high_frequency,
        warning: high_frequency > RESOLUTION_WARNING,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_green(n: usize, scale: f64) -> PeriodicField {
        PeriodicField::sample(2, n, 2, vec![0.0], |_, x, o| {
            o[0] = scale * x[0].cos() * x[1].sin();
            o[1] = -scale * x[0].sin() * x[1].cos();
        })
    }

    #[test]
    fn taylor_green_decays_exactly() {
        let phi = taylor_green(32, 1.0);
        let run = reference_spectral_ns(&phi, 0.5, 32, 1e-3, 50).unwrap();
        let err = run.state.relative_error(|t| taylor_green(32, t.exp()));
        assert!(err < 1e-6, "{err}");
        assert!(run.energy_residual < 1e-4, "{}", run.energy_residual);
        assert_eq!(run.state.times.len(), 11);
        assert_eq!(*run.state.times.last().unwrap(), 0.0);
        assert!(!run.warning);
    }

    #[test]
    fn zero_datum_stays_zero_and_mean_flow_is_kept() {
        let zero = PeriodicField::zeros(2, 16, 2, vec![0.0]);
        let run = reference_spectral_ns(&zero, 0.1, 16, 1e-2, 10).unwrap();
        assert!(run.state.field.values().iter().all(|&v| v == 0.0));

        let phi = PeriodicField::sample(2, 16, 2, vec![0.0], |_, x, o| {
            o[0] = 0.3 + x[0].cos() * x[1].sin() + 0.2 * (2.0 * x[1]).sin();
            o[1] = -0.1 - x[0].sin() * x[1].cos();
        });
        let run = reference_spectral_ns(&phi, 0.1, 16, 1e-2, 5).unwrap();
        let grid = phi.grid();
        let p = leray_project(&phi);
        for c in 0..2 {
            let m0 = grid.to_spectral(p.slice(0, c))[0];
            for ti in 0..run.state.times.len() {
                let m = grid.to_spectral(run.state.field.slice(ti, c))[0];
                assert!((m - m0).norm() <= 1e-12 * m0.norm().max(1.0), "{m} {m0}");
            }
        }
        assert!(run.state.divergence() < 1e-10);
    }
}
