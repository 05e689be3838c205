//! Fixed-point iteration of the backward stochastic Lagrangian system.
//!
//! Time runs on `[-T, 0]` with the datum `φ` at `t = 0`. Paths started at
//! `(t, x)` move forward to the end of their sub-interval under the current
//! velocity; `u(t) = P E[∇^⊤X φ(X)]` with `φ` replaced by the converged
//! velocity at the right end of each sub-interval (the difference is a
//! gradient and is removed by `P`).

use crate::error::{Error, Result};
use crate::flow::euler::steps_between;
use crate::grid::PeriodicField;
use crate::pde::CFL_FRACTION;
use crate::rng::BrownianSource;

use super::representation::expectation;
use super::spectral::{leray_project, relative_divergence};
use super::tables::{Terminal, VelocityTables};

/// Tolerance on the spectral divergence of every stored velocity.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-8;

/// Settings of a Picard solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NsRunConfig {
    /// Grid points per axis.
    pub n: usize,
    /// Horizon `T`; the solve covers `[-T, 0]`.
    pub horizon: f64,
    /// Monte Carlo paths per grid node.
    pub paths: usize,
    pub dt: f64,
    pub max_iterations: usize,
    /// Length of each Picard window; divides `horizon`.
    pub sub_interval: f64,
    /// Spacing of stored velocity snapshots; divides `sub_interval`.
    pub snapshot_every: f64,
    pub seed: u64,
    /// Relative sup-in-time L² change that stops the iteration.
    pub tolerance: f64,
    /// Refinement factor of the interpolation tables.
    pub upsample: usize,
    pub antithetic: bool,
    /// Largest acceptable per-node standard error; above it the result is inconclusive.
    pub se_bound: f64,
}

impl NsRunConfig {
    pub fn new(n: usize, horizon: f64, paths: usize, dt: f64, seed: u64) -> Self {
        Self {
            n,
            horizon,
            paths,
            dt,
            max_iterations: 6,
            sub_interval: horizon / 8.0,
            snapshot_every: horizon / 8.0,
            seed,
            tolerance: 1e-3,
            upsample: 4,
            antithetic: true,
            se_bound: f64::INFINITY,
        }
    }

    pub fn with_sub_interval(mut self, len: f64, snapshot_every: f64) -> Self {
        self.sub_interval = len;
        self.snapshot_every = snapshot_every;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_max_iterations(mut self, k: usize) -> Self {
        self.max_iterations = k;
        self
    }

    pub fn with_se_bound(mut self, bound: f64) -> Self {
        self.se_bound = bound;
        self
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn with_upsample(mut self, factor: usize) -> Self {
        self.upsample = factor;
        self
    }

    /// Number of sub-intervals and snapshots per sub-interval.
    pub fn layout(&self) -> Result<(usize, usize)> {
        if self.n < 4 || self.paths < 2 || self.max_iterations == 0 || self.upsample == 0 {
            return Err(Error::Domain("NS run needs n >= 4, paths >= 2 and at least one iteration".into()));
        }
        let subs = steps_between(0.0, self.horizon, self.sub_interval)?;
        let per = steps_between(0.0, self.sub_interval, self.snapshot_every)?;
        steps_between(0.0, self.snapshot_every, self.dt)?;
        if subs == 0 || per == 0 {
            return Err(Error::Domain("empty NS time grid".into()));
        }
        Ok((subs, per))
    }

    fn source(&self, d: usize) -> BrownianSource {
        BrownianSource::new(self.seed, d, self.dt, -self.horizon).with_antithetic(self.antithetic)
    }
}

/// Velocity on the snapshot grid of `[-T, 0]` with the Picard history.
#[derive(Debug, Clone)]
pub struct VelocityState {
    /// Snapshot times, ascending from `-T` to `0`.
    pub times: Vec<f64>,
    /// One divergence-free snapshot per time.
    pub field: PeriodicField,
    /// The datum `φ` as given.
    pub phi: PeriodicField,
    /// Iterations used per sub-interval, latest window (nearest `-T`) last.
    pub iterations: Vec<usize>,
    /// Relative residual after each iteration, per sub-interval.
    pub residuals: Vec<Vec<f64>>,
    pub converged: bool,
    /// Largest per-node standard error of any accepted iterate.
    pub max_se: f64,
    /// Set when the iteration stalled or the standard error exceeded its bound.
    pub inconclusive: bool,
}

impl VelocityState {
    /// Velocity held at every time equal to `Pφ`, the initial Picard guess.
    pub fn frozen(phi: &PeriodicField, times: Vec<f64>) -> Self {
        let p = leray_project(&phi.at(0));
        let mut field = PeriodicField::zeros(phi.dim(), phi.n(), phi.dim(), Vec::new());
        for &t in &times {
            field.push(t, p.snapshot(0));
        }
        Self {
            times,
            field,
            phi: phi.at(0),
            iterations: Vec::new(),
            residuals: Vec::new(),
            converged: true,
            max_se: 0.0,
            inconclusive: false,
        }
    }

    /// Largest iteration count over sub-intervals.
    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().cloned().max().unwrap_or(0)
    }

    /// Index of the snapshot at time `t`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-9)
    }

    pub fn snapshot(&self, t: f64) -> Option<PeriodicField> {
        self.index_of(t).map(|i| self.field.at(i))
    }

    /// Relative L² distance to `exact(t)` maximised over snapshot times.
    pub fn relative_error<F: Fn(f64) -> PeriodicField>(&self, exact: F) -> f64 {
        let grid = self.field.grid();
        let d = self.field.dim();
        let mut worst: f64 = 0.0;
        for (i, &t) in self.times.iter().enumerate() {
            let e = exact(t);
            let (mut num, mut den) = (0.0, 0.0);
            for c in 0..d {
                let a = self.field.slice(i, c);
                let b = e.slice(0, c);
                let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                num += grid.l2_norm(&diff).powi(2);
                den += grid.l2_norm(b).powi(2);
            }
            if den > 0.0 {
                worst = worst.max((num / den).sqrt());
            } else if num > 0.0 {
                worst = f64::INFINITY;
            }
        }
        worst
    }

    /// Largest spectral divergence ratio over snapshots.
    pub fn divergence(&self) -> f64 {
        relative_divergence(&self.field)
    }

    pub(crate) fn tables(&self, a: f64, b: f64, factor: usize) -> VelocityTables {
        let snaps: Vec<(f64, PeriodicField)> = self
            .times
            .iter()
            .enumerate()
            .filter(|(_, &t)| t >= a - 1e-9 && t <= b + 1e-9)
            .map(|(i, &t)| (t, self.field.at(i)))
            .collect();
        let refs: Vec<(f64, &PeriodicField)> = snaps.iter().map(|(t, f)| (*t, f)).collect();
        VelocityTables::new(&refs, factor)
    }
}

/// One evaluation of the representation at a single time.
#[derive(Debug, Clone)]
pub struct RepresentationField {
    pub field: PeriodicField,
    pub max_se: f64,
    pub inconclusive: bool,
}

fn check_cfl(state: &VelocityState, a: f64, b: f64, dt: f64) -> Result<()> {
    let h = crate::grid::PERIOD / state.field.n() as f64;
    let d = state.field.dim();
    let mut peak: f64 = 0.0;
    for (i, &t) in state.times.iter().enumerate() {
        if t < a - 1e-9 || t > b + 1e-9 {
            continue;
        }
        let snap = state.field.snapshot(i);
        let len = state.field.nodes_len();
        for node in 0..len {
            let s: f64 = (0..d).map(|c| snap[c * len + node].powi(2)).sum();
            peak = peak.max(s.sqrt());
        }
    }
    if peak * dt > CFL_FRACTION * h {
        return Err(Error::Domain(format!(
            "CFL violated on [{a}, {b}]: max|u| dt = {:.3e} > {:.3e}",
            peak * dt,
            CFL_FRACTION * h
        )));
    }
    Ok(())
}

fn check_datum(phi: &PeriodicField, cfg: &NsRunConfig) -> Result<()> {
    let d = phi.dim();
    if !(2..=3).contains(&d) || phi.components() != d {
        return Err(Error::Domain("the velocity datum must be a d-component field with d in {2, 3}".into()));
    }
    if phi.n() != cfg.n {
        return Err(Error::Domain(format!("datum grid {} differs from configured {}", phi.n(), cfg.n)));
    }
    Ok(())
}

/// `P E[∇^⊤X_{t,0} φ(X_{t,0})]` with paths driven by the velocity stored in `state`.
pub fn representation_step(
    state: &VelocityState,
    t: f64,
    phi: &PeriodicField,
    cfg: &NsRunConfig,
) -> Result<RepresentationField> {
    check_datum(phi, cfg)?;
    if !(t <= 0.0 && t >= -cfg.horizon - 1e-9) {
        return Err(Error::Domain(format!("time {t} outside [-T, 0]")));
    }
    if t.abs() <= 1e-12 {
        return Ok(RepresentationField {
            field: leray_project(&phi.at(0)),
            max_se: 0.0,
            inconclusive: false,
        });
    }
    check_cfl(state, t, 0.0, cfg.dt)?;
    let d = phi.dim();
    let tables = state.tables(t, 0.0, cfg.upsample);
    let terminal = Terminal::vector(&phi.at(0), cfg.upsample);
    let e = expectation(&tables, &terminal, true, &[t], 0.0, cfg.n, cfg.paths, &cfg.source(d))?;
    let max_se = e.max_se[0];
    Ok(RepresentationField {
        field: leray_project(&e.fields[0]),
        max_se,
        inconclusive: max_se > cfg.se_bound,
    })
}

fn relative_change(new: &[PeriodicField], old: &[PeriodicField]) -> f64 {
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (a, b) in new.iter().zip(old) {
        let grid = a.grid();
        let (mut dn, mut sa, mut sb) = (0.0, 0.0, 0.0);
        for c in 0..a.components() {
            let x = a.slice(0, c);
            let y = b.slice(0, c);
            let dv: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            dn += grid.l2_norm(&dv).powi(2);
            sa += grid.l2_norm(x).powi(2);
            sb += grid.l2_norm(y).powi(2);
        }
        diff = diff.max(dn.sqrt());
        scale = scale.max(sa.sqrt()).max(sb.sqrt());
    }
    if scale > 0.0 {
        diff / scale
    } else {
        0.0
    }
}

/// Picard iteration marching backward over sub-intervals from `t = 0` to `-T`.
///
/// Each window starts from the converged velocity at its right end, held
/// constant, and reuses one set of paths across iterations.
pub fn picard_solve(phi: &PeriodicField, cfg: &NsRunConfig) -> Result<VelocityState> {
    check_datum(phi, cfg)?;
    let (subs, per) = cfg.layout()?;
    let d = phi.dim();
    let total = subs * per;
    let times: Vec<f64> = (0..=total)
        .map(|i| -cfg.horizon + i as f64 * cfg.snapshot_every)
        .map(|t| if t.abs() < 1e-12 { 0.0 } else { t })
        .collect();
    let mut state = VelocityState::frozen(phi, times.clone());
    let source = cfg.source(d);
    let mut converged = true;
    let mut inconclusive = false;
    let mut max_se: f64 = 0.0;
    for w in (0..subs).rev() {
        let lo = w * per;
        let hi = (w + 1) * per;
        let (a, b) = (times[lo], times[hi]);
        let tail = state.field.at(hi);
        for i in lo..hi {
            state.field.snapshot_mut(i).copy_from_slice(tail.snapshot(0));
        }
        let terminal = Terminal::vector(&tail, cfg.upsample);
        let starts: Vec<f64> = times[lo..hi].to_vec();
        let mut history = Vec::new();
        let mut window_converged = false;
        let mut window_se: f64 = 0.0;
        for _ in 0..cfg.max_iterations {
            check_cfl(&state, a, b, cfg.dt)?;
            let tables = state.tables(a, b, cfg.upsample);
            let e = expectation(&tables, &terminal, true, &starts, b, cfg.n, cfg.paths, &source)?;
            let new: Vec<PeriodicField> = e.fields.iter().map(leray_project).collect();
            let old: Vec<PeriodicField> = (lo..hi).map(|i| state.field.at(i)).collect();
            let r = relative_change(&new, &old);
            for (k, f) in new.iter().enumerate() {
                state.field.snapshot_mut(lo + k).copy_from_slice(f.snapshot(0));
            }
            window_se = e.max_se.iter().cloned().fold(0.0, f64::max);
            history.push(r);
            if r <= cfg.tolerance {
                window_converged = true;
                break;
            }
        }
        max_se = max_se.max(window_se);
        if !window_converged {
            converged = false;
            inconclusive = true;
        }
        if window_se > cfg.se_bound {
            inconclusive = true;
        }
        state.iterations.push(history.len());
        state.residuals.push(history);
    }
    state.converged = converged;
    state.inconclusive = inconclusive;
    state.max_se = max_se;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shear(n: usize, scale: f64) -> PeriodicField {
        PeriodicField::sample(2, n, 2, vec![0.0], |_, x, o| {
            o[0] = scale * x[1].sin();
            o[1] = 0.0;
        })
    }

    #[test]
    fn zero_datum_converges_in_one_iteration() {
        let phi = PeriodicField::zeros(2, 8, 2, vec![0.0]);
        let cfg = NsRunConfig::new(8, 0.1, 4, 1e-2, 1).with_sub_interval(0.05, 0.05);
        let state = picard_solve(&phi, &cfg).unwrap();
        assert!(state.converged);
        assert_eq!(state.iterations, vec![1, 1]);
        assert!(state.residuals.iter().flatten().all(|&r| r == 0.0));
        assert!(state.field.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn representation_at_final_time_is_the_projected_datum() {
        let phi = PeriodicField::sample(2, 16, 2, vec![0.0], |_, x, o| {
            o[0] = x[1].sin() + x[0].sin();
            o[1] = (x[0] + x[1]).cos();
        });
        let cfg = NsRunConfig::new(16, 0.1, 4, 1e-2, 1);
        let state = VelocityState::frozen(&phi, vec![-0.1, 0.0]);
        let r = representation_step(&state, 0.0, &phi, &cfg).unwrap();
        assert_eq!(r.field.values(), leray_project(&phi).values());
        assert_eq!(r.max_se, 0.0);
    }

    #[test]
    fn heat_smoothing_without_drift() {
        let n = 8;
        let phi = shear(n, 1.0);
        let zero = PeriodicField::zeros(2, n, 2, vec![0.0]);
        let cfg = NsRunConfig::new(n, 0.2, 4000, 1e-2, 3);
        let state = VelocityState::frozen(&zero, vec![-0.2, 0.0]);
        let r = representation_step(&state, -0.2, &phi, &cfg).unwrap();
        let exact = shear(n, (-0.1f64).exp());
        let worst = r
            .field
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 3.0 * r.max_se + 1e-12, "{worst} vs se {}", r.max_se);
        assert!(relative_divergence(&r.field) < DIVERGENCE_TOLERANCE);
    }

    #[test]
    fn shear_datum_is_a_fixed_point_family() {
        // (sin y, 0) is transported along itself without change, so u(t) = e^{t/2} φ
        let n = 16;
        let phi = shear(n, 0.5);
        let cfg = NsRunConfig::new(n, 0.1, 400, 1e-3, 5)
            .with_sub_interval(0.05, 0.05)
            .with_tolerance(1e-2);
        let state = picard_solve(&phi, &cfg).unwrap();
        assert!(state.converged, "{:?}", state.residuals);
        let err = state.relative_error(|t| shear(n, 0.5 * (0.5 * t).exp()));
        assert!(err < 2e-2, "{err}");
        assert!(state.divergence() < DIVERGENCE_TOLERANCE);
    }

    #[test]
    fn config_layout_is_validated() {
        assert!(NsRunConfig::new(16, 0.5, 10, 1e-3, 0).with_sub_interval(0.3, 0.1).layout().is_err());
        assert_eq!(
            NsRunConfig::new(16, 0.5, 10, 1e-3, 0).with_sub_interval(0.1, 0.05).layout().unwrap(),
            (5, 2)
        );
    }
}
