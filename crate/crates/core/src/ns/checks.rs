//! Consistency checks on a computed velocity: the unprojected `w` equation and L^q persistence.

use crate::error::{Error, Result};
use crate::grid::{PeriodicField, SpectralGrid};
use crate::norms::ScalarFn;
use crate::report::{EstimateReport, Verdict};

use super::picard::{NsRunConfig, VelocityState};
use super::representation::expectation;
use super::tables::Terminal;

/// Where and how the `w` equation is differenced in time.
#[derive(Debug, Clone, PartialEq)]
pub struct WResidualConfig {
    /// Centre time; `t - delta` and `t + delta` must lie in `[-T, 0]` and on the snapshot grid's span.
    pub t: f64,
    pub delta: f64,
    /// Acceptable relative residual.
    pub bound: f64,
}

impl WResidualConfig {
    pub fn new(t: f64, delta: f64) -> Self {
        Self { t, delta, bound: 5e-2 }
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }
}

fn lq_norm(grid: &SpectralGrid, values: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    }
    let s: f64 = values.iter().map(|v| v.abs().powf(q)).sum();
    (s * grid.cell_volume()).powf(1.0 / q)
}

fn velocity_at(state: &VelocityState, t: f64) -> Result<PeriodicField> {
    state
        .snapshot(t)
        .ok_or_else(|| Error::Domain(format!("time {t} is not a stored velocity time")))
}

/// Unprojected `E[∇^⊤X_{s,0} φ(X_{s,0})]` for each `s` in `starts`, with common noise.
fn w_fields(
    state: &VelocityState,
    starts: &[f64],
    phi: &PeriodicField,
    cfg: &NsRunConfig,
    seed: u64,
) -> Result<(Vec<PeriodicField>, f64)> {
    let d = phi.dim();
    let first = starts.iter().cloned().fold(0.0, f64::min);
    let tables = state.tables(first, 0.0, cfg.upsample);
    let terminal = Terminal::vector(&phi.at(0), cfg.upsample);
    let source = crate::rng::BrownianSource::new(seed, d, cfg.dt, -cfg.horizon).with_antithetic(cfg.antithetic);
    let e = expectation(&tables, &terminal, true, starts, 0.0, cfg.n, cfg.paths, &source)?;
    let se = e.max_se.iter().cloned().fold(0.0, f64::max);
    Ok((e.fields, se))
}

/// Relative L² residual of `∂_t w + ½Δw + (u·∇)w + (∇^⊤u)w = 0` at one time.
///
/// `w` is estimated at `t - δ, t, t + δ` from shared paths; `∂_t w` is the
/// central difference.
pub fn w_equation_residual(
    state: &VelocityState,
    phi: &PeriodicField,
    cfg: &NsRunConfig,
    w: &WResidualConfig,
) -> Result<EstimateReport> {
    let d = phi.dim();
    if !(w.delta > 0.0) || w.t - w.delta < -cfg.horizon - 1e-9 || w.t + w.delta > 1e-9 {
        return Err(Error::Domain("w residual stencil leaves [-T, 0]".into()));
    }
    let u = velocity_at(state, w.t)?;
    let starts = [w.t - w.delta, w.t, w.t + w.delta];
    let seed = cfg.seed.wrapping_add(1);
    let (fields, max_se) = w_fields(state, &starts, phi, cfg, seed)?;
    let grid = u.grid();
    let len = grid.len();
    let mut res = vec![vec![0.0; len]; d];
    let mut w_norm2 = 0.0;
    let mut dw = vec![vec![Vec::new(); d]; d];
    let mut du = vec![vec![Vec::new(); d]; d];
    for i in 0..d {
        for a in 0..d {
            dw[i][a] = grid.derivative(fields[1].slice(0, i), a);
            du[i][a] = grid.derivative(u.slice(0, i), a);
        }
    }
    for i in 0..d {
        let wi = fields[1].slice(0, i);
        w_norm2 += grid.l2_norm(wi).powi(2);
        let lap = grid.laplacian(wi);
        let (lo, hi) = (fields[0].slice(0, i), fields[2].slice(0, i));
        for node in 0..len {
            let mut r = (hi[node] - lo[node]) / (2.0 * w.delta) + 0.5 * lap[node];
            for a in 0..d {
                r += u.slice(0, a)[node] * dw[i][a][node];
                r += du[a][i][node] * fields[1].slice(0, a)[node];
            }
            res[i][node] = r;
        }
    }
    let r_norm = res.iter().map(|r| grid.l2_norm(r).powi(2)).sum::<f64>().sqrt();
    let w_norm = w_norm2.sqrt();
    let rel = if w_norm > 0.0 { r_norm / w_norm } else { r_norm };
    let mut report = EstimateReport::new("w_equation_residual", seed);
    report
        .value("t", w.t)
        .value("delta", w.delta)
        .value("residual_l2", r_norm)
        .value("w_l2", w_norm)
        .value("relative_residual", rel)
        .value("max_se", max_se)
        .row("t", w.t, "relative_residual", rel, max_se / w_norm.max(f64::MIN_POSITIVE))
        .check_le("relative residual", rel, w.bound);
    if d == 2 {
        report.note("two-dimensional run, outside the d >= 3 setting of the theory");
    }
    Ok(report)
}

/// `‖E f(X_{t,0}^·)‖_q ≤ ‖f‖_q` at each `t`, allowing `3‖SE‖_q` of Monte Carlo slack.
pub fn lp_persistence_check(
    state: &VelocityState,
    f: &ScalarFn,
    q: f64,
    times: &[f64],
    cfg: &NsRunConfig,
) -> Result<EstimateReport> {
    if !(q >= 1.0) {
        return Err(Error::Domain(format!("q = {q} must be at least 1")));
    }
    let d = state.field.dim();
    let grid = state.field.grid();
    let f_values = grid.sample(|x| f.eval(x));
    let rhs = lq_norm(&grid, &f_values, q);
    let seed = cfg.seed.wrapping_add(2);
    let mut report = EstimateReport::new("lp_persistence", seed);
    report.value("q", q).value("f_norm", rhs);
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut ok = true;
    for &t in times {
        if !(t <= 0.0 && t >= -cfg.horizon - 1e-9) {
            return Err(Error::Domain(format!("time {t} outside [-T, 0]")));
        }
        let (lhs, se_norm) = if t.abs() <= 1e-12 {
            (rhs, 0.0)
        } else {
            let tables = state.tables(t, 0.0, cfg.upsample);
            let terminal = Terminal::Scalar(f.clone());
            let source =
                crate::rng::BrownianSource::new(seed, d, cfg.dt, -cfg.horizon).with_antithetic(cfg.antithetic);
            let e = expectation(&tables, &terminal, false, &[t], 0.0, cfg.n, cfg.paths, &source)?;
            (lq_norm(&grid, e.fields[0].slice(0, 0), q), lq_norm(&grid, &e.se[0], q))
        };
        let slack = lhs - rhs - 3.0 * se_norm;
        worst = worst.max(slack);
        ok &= slack <= 0.0;
        report.row("t", t, "lhs", lhs, se_norm).row("t", t, "rhs", rhs, 0.0);
    }
    report.value("worst_slack", worst);
    report.check(
        "persistence",
        Verdict::from_bool(ok),
        format!("max(lhs - rhs - 3 SE) = {worst:.3e}"),
    );
    Ok(report)
}

/// Unprojected `w(t) = E[∇^⊤X_{t,0} φ(X_{t,0})]`; `w(0) = φ`.
pub fn w_field(state: &VelocityState, t: f64, phi: &PeriodicField, cfg: &NsRunConfig) -> Result<(PeriodicField, f64)> {
    if t.abs() <= 1e-12 {
        return Ok((phi.at(0), 0.0));
    }
    let (mut f, se) = w_fields(state, &[t], phi, cfg, cfg.seed.wrapping_add(1))?;
    Ok((f.remove(0), se))
}
