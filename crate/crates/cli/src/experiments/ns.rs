//! Leray projection, the stochastic Lagrangian Navier–Stokes solve and its spectral oracle.

use std::time::Instant;

use critflow::grid::PeriodicField;
use critflow::norms::ScalarFn;
use critflow::ns::{
    leray_project, lp_persistence_check, picard_solve, reference_spectral_ns, relative_divergence,
    representation_step, w_equation_residual, NsRunConfig, VelocityState, WResidualConfig, DIVERGENCE_TOLERANCE,
};
use critflow::report::{EstimateReport, Verdict};
use critflow::rng::BrownianSource;

use super::{aligned, all, at_least, grid_size, positive};
use crate::config::{float, int, list, Params};
use crate::registry::{Experiment, Outcome};

const TWO_D_NOTE: &str = "2-D run: outside the d >= 3 standing assumption, kept for the exact Taylor-Green oracle";

pub(crate) fn experiments() -> Vec<Experiment> {
    vec![
        Experiment {
            id: "leray.idempotent",
            module: "lagrangian_ns",
            summary: "Leray projection is idempotent, self-adjoint, kills gradients and returns divergence-free fields",
            default_seed: 31,
            params: vec![
                int("n", 64, "grid per axis"),
                int("kmax", 3, "largest |k_a| of the random modes"),
                float("tolerance", 1e-10, "relative tolerance"),
            ],
            validate: |p| all(&[grid_size(p, "n"), at_least(p, "kmax", 1), positive(p, &["tolerance"])]),
            run: run_leray,
        },
        Experiment {
            id: "ns.reference",
            module: "lagrangian_ns",
            summary: "pseudo-spectral backward Navier-Stokes: exact Taylor-Green decay, energy budget, zero datum, mean flow",
            default_seed: 32,
            params: vec![
                int("n", 32, "grid per axis"),
                float("horizon", 0.5, "T"),
                float("dt", 1e-3, "step"),
                int("record_every", 50, "steps between stored snapshots"),
            ],
            validate: |p| {
                all(&[
                    grid_size(p, "n"),
                    at_least(p, "record_every", 1),
                    positive(p, &["horizon", "dt"]),
                    aligned(0.0, p.f64("horizon"), p.f64("dt") * p.usize("record_every") as f64, "record spacing must divide T"),
                ])
            },
            run: run_reference,
        },
        Experiment {
            id: "ns.representation",
            module: "lagrangian_ns",
            summary: "one representation step: heat smoothing for u = 0, gradients project out, t = 0 returns the projected datum",
            default_seed: 33,
            params: vec![
                int("n", 16, "grid per axis"),
                float("t", 0.2, "|t| of the start time"),
                float("dt", 1e-2, "step"),
                int("paths", 4000, "paths per node"),
            ],
            validate: |p| {
                all(&[
                    grid_size(p, "n"),
                    at_least(p, "paths", 2),
                    positive(p, &["t", "dt"]),
                    aligned(0.0, p.f64("t"), p.f64("dt"), "dt must divide [t, 0]"),
                ])
            },
            run: run_representation,
        },
        Experiment {
            id: "ns.taylor_green",
            module: "lagrangian_ns",
            summary: "Picard solve of the stochastic system converges to the exact 2-D Taylor-Green decay; w residual and L^q persistence",
            default_seed: 34,
            params: vec![
                int("n", 32, "grid per axis"),
                float("horizon", 0.5, "T"),
                int("paths", 2000, "paths per node"),
                float("dt", 1e-3, "step"),
                float("sub_interval", 0.025, "Picard window length"),
                float("snapshot_every", 0.025, "velocity snapshot spacing"),
                float("tolerance", 1e-3, "relative change stopping the iteration"),
                int("max_iterations", 6, "iteration cap per window"),
                int("upsample", 4, "refinement of the interpolation tables"),
                float("error_bound", 5e-2, "bound on the relative L2 error"),
                float("max_seconds", 900.0, "runtime budget of the Picard solve"),
                float("w_t", -0.2, "centre time of the w residual"),
                float("w_delta", 0.1, "time difference of the w residual"),
                float("w_bound", 5e-2, "bound on the relative w residual"),
                int("lp_paths", 500, "paths per node of the persistence check"),
                list("lp_times", &[-0.1, -0.5], "times of the persistence check"),
            ],
            validate: validate_taylor_green,
            run: run_taylor_green,
        },
        Experiment {
            id: "ns.lp_persistence",
            module: "lagrangian_ns",
            summary: "L^q norm of E f(X_{t,0}) never exceeds that of f for divergence-free velocities",
            default_seed: 35,
            params: vec![
                int("n", 16, "grid per axis"),
                float("horizon", 0.5, "T"),
                float("dt", 1e-2, "step"),
                int("paths", 2000, "paths per node"),
                float("q", 2.0, "exponent"),
                list("times", &[-0.1, -0.25, -0.5], "evaluation times"),
            ],
            validate: |p| {
                all(&[
                    grid_size(p, "n"),
                    at_least(p, "paths", 2),
                    positive(p, &["horizon", "dt"]),
                    if p.f64("q") >= 1.0 { Ok(()) } else { Err("`q` must be at least 1".into()) },
                    times_in_window(p.list("times"), p.f64("horizon")),
                    aligned(0.0, p.f64("horizon"), p.f64("dt"), "dt must divide [-T, 0]"),
                ])
            },
            run: run_lp,
        },
    ]
}

fn times_in_window(times: &[f64], horizon: f64) -> Result<(), String> {
    if times.is_empty() || times.iter().any(|&t| !(t <= 0.0 && t >= -horizon)) {
        return Err(format!("times must lie in [-{horizon}, 0]"));
    }
    Ok(())
}

/// Exact backward Taylor-Green velocity `s (cos x sin y, -sin x cos y)`.
fn taylor_green(n: usize, s: f64) -> PeriodicField {
    PeriodicField::sample(2, n, 2, vec![0.0], |_, x, o| {
        o[0] = s * x[0].cos() * x[1].sin();
        o[1] = -s * x[0].sin() * x[1].cos();
    })
}

/// `(amp sin y, 0)`.
fn shear(n: usize, amp: f64) -> PeriodicField {
    PeriodicField::sample(2, n, 2, vec![0.0], |_, x, o| {
        o[0] = amp * x[1].sin();
        o[1] = 0.0;
    })
}

fn dot(a: &PeriodicField, b: &PeriodicField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
}

fn norm(a: &PeriodicField) -> f64 {
    dot(a, a).sqrt()
}

fn max_abs(a: &PeriodicField) -> f64 {
    a.values().iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Random smooth field: every mode with `|k_a| <= kmax` gets Gaussian cosine and sine amplitudes.
fn random_field(d: usize, n: usize, comps: usize, kmax: i64, source: &BrownianSource, path: u64) -> PeriodicField {
    let side = (2 * kmax + 1) as usize;
    let count = side.pow(d as u32);
    let draws = (2 * comps * count).div_ceil(d);
    let z = source.increments(path, 0, draws);
    let scale = 1.0 / source.dt().sqrt();
    let modes: Vec<[f64; 4]> = (0..count)
        .map(|j| {
            let mut k = [0.0; 4];
            let mut rem = j;
            for a in 0..d {
                k[a] = (rem % side) as f64 - kmax as f64;
                rem /= side;
            }
            k
        })
        .collect();
    PeriodicField::sample(d, n, comps, vec![0.0], |_, x, o| {
        for (c, slot) in o.iter_mut().enumerate().take(comps) {
            let mut v = 0.0;
            for (j, k) in modes.iter().enumerate() {
                let phase: f64 = (0..d).map(|a| k[a] * x[a]).sum();
                let (s, co) = phase.sin_cos();
                let base = 2 * (c * count + j);
                v += scale * (z[base] * co + z[base + 1] * s);
            }
            *slot = v;
        }
    })
}

fn run_leray(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let n = p.usize("n");
    let kmax = p.usize("kmax") as i64;
    let tol = p.f64("tolerance");
    let mut reports = Vec::new();
    for d in [2usize, 3] {
        let source = BrownianSource::new(seed, d, 1.0, 0.0);
        let f = random_field(d, n, d, kmax, &source, 0);
        let g = random_field(d, n, d, kmax, &source, 1);
        let psi = random_field(d, n, 1, kmax, &source, 2);
        let grid = f.grid();
        let pf = leray_project(&f);
        let ppf = leray_project(&pf);
        let idem = norm(&ppf.sub(&pf)) / norm(&pf);
        let pg = leray_project(&g);
        let adj = (dot(&pf, &g) - dot(&f, &pg)).abs() / (norm(&f) * norm(&g));
        let mut grad = PeriodicField::zeros(d, n, d, vec![0.0]);
        for a in 0..d {
            let da = grid.derivative(psi.slice(0, 0), a);
            grad.slice_mut(0, a).copy_from_slice(&da);
        }
        let killed = norm(&leray_project(&grad)) / norm(&grad);
        let div = relative_divergence(&pf);
        let mut rep = EstimateReport::new(format!("leray_{d}d"), seed);
        rep.value("d", d as f64)
            .value("idempotence", idem)
            .value("self_adjointness", adj)
            .value("gradient_residual", killed)
            .value("divergence", div)
            .check_le("idempotent", idem, tol)
            .check_le("self-adjoint", adj, tol)
            .check_le("gradients annihilated", killed, tol)
            .check_le("output divergence", div, tol);
        reports.push(rep);
    }
    let n2 = p.usize("n");
    let along = PeriodicField::sample(2, n2, 2, vec![0.0], |_, x, o| {
        o[0] = x[0].sin();
        o[1] = 0.0;
    });
    let across = shear(n2, 1.0);
    let killed = max_abs(&leray_project(&along));
    let kept = max_abs(&leray_project(&across).sub(&across));
    let tol = p.f64("tolerance");
    let mut rep = EstimateReport::new("leray_single_mode", seed);
    rep.value("parallel_mode_residual", killed)
        .value("transverse_mode_change", kept)
        .check_le("(sin x, 0) projects to 0", killed, tol)
        .check_le("(sin y, 0) unchanged", kept, tol);
    reports.push(rep);
    Ok(Outcome::from_reports(reports))
}

fn run_reference(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let (n, horizon, dt, every) = (p.usize("n"), p.f64("horizon"), p.f64("dt"), p.usize("record_every"));
    let phi = taylor_green(n, 1.0);
    let run = reference_spectral_ns(&phi, horizon, n, dt, every)?;
    let err = run.state.relative_error(|t| taylor_green(n, t.exp()));
    let mut tg = EstimateReport::new("reference_taylor_green", seed);
    tg.value("relative_error", err)
        .value("energy_residual", run.energy_residual)
        .value("high_frequency", run.high_frequency)
        .check_le("exact decay", err, 1e-6)
        .check_le("energy budget", run.energy_residual, 1e-4)
        .check(
            "resolution",
            Verdict::from_bool(!run.warning),
            format!("high-frequency fraction {:.3e}", run.high_frequency),
        )
        .note(TWO_D_NOTE);

    let zero = PeriodicField::zeros(2, n, 2, vec![0.0]);
    let z = reference_spectral_ns(&zero, horizon, n, dt, every)?;
    let zmax = max_abs(&z.state.field);
    let mut zr = EstimateReport::new("reference_zero", seed);
    zr.value("max_abs", zmax).check("zero datum stays zero", Verdict::from_bool(zmax == 0.0), format!("{zmax:e}"));

    let mixed = PeriodicField::sample(2, n, 2, vec![0.0], |_, x, o| {
        o[0] = 0.3 + x[0].cos() * x[1].sin() + 0.2 * (2.0 * x[1]).sin();
        o[1] = -0.1 - x[0].sin() * x[1].cos();
    });
    let m = reference_spectral_ns(&mixed, horizon, n, dt, every)?;
    let grid = mixed.grid();
    let p0 = leray_project(&mixed);
    let mut drift: f64 = 0.0;
    for c in 0..2 {
        let m0 = grid.to_spectral(p0.slice(0, c))[0];
        for ti in 0..m.state.times.len() {
            let mt = grid.to_spectral(m.state.field.slice(ti, c))[0];
            drift = drift.max((mt - m0).norm() / m0.norm().max(1.0));
        }
    }
    let mut mr = EstimateReport::new("reference_mean_flow", seed);
    mr.value("mean_mode_change", drift)
        .value("divergence", m.state.divergence())
        .check_le("mean mode conserved", drift, 1e-12)
        .check_le("divergence-free", m.state.divergence(), DIVERGENCE_TOLERANCE);
    let mut out = Outcome::from_reports(vec![tg, zr, mr]);
    out.fields.push(("reference_u".into(), run.state.field));
    Ok(out)
}

fn run_representation(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let (n, t, dt, paths) = (p.usize("n"), p.f64("t"), p.f64("dt"), p.usize("paths"));
    let cfg = NsRunConfig::new(n, t, paths, dt, seed).with_sub_interval(t, t);
    let zero = PeriodicField::zeros(2, n, 2, vec![0.0]);
    let state = VelocityState::frozen(&zero, vec![-t, 0.0]);
    let rms = |f: &PeriodicField| {
        (f.values().iter().map(|v| v * v).sum::<f64>() / f.values().len() as f64).sqrt()
    };

    let phi = shear(n, 1.0);
    let r = representation_step(&state, -t, &phi, &cfg)?;
    let exact = shear(n, (-0.5 * t).exp());
    let err = rms(&r.field.sub(&exact));
    let mut heat = EstimateReport::new("representation_heat", seed);
    heat.value("rms_error", err)
        .value("max_se", r.max_se)
        .check_le("heat-smoothed mode within 3 SE", err, 3.0 * r.max_se)
        .check_le("divergence-free", relative_divergence(&r.field), DIVERGENCE_TOLERANCE);

    let gphi = PeriodicField::sample(2, n, 2, vec![0.0], |_, x, o| {
        o[0] = -(x[0] + x[1]).sin();
        o[1] = -(x[0] + x[1]).sin();
    });
    let g = representation_step(&state, -t, &gphi, &cfg)?;
    let gmax = max_abs(&g.field);
    let mut grad = EstimateReport::new("representation_gradient", seed);
    grad.value("max_abs", gmax)
        .value("max_se", g.max_se)
        .check_le("gradient datum projects out", gmax, 3.0 * g.max_se);

    let mixed = PeriodicField::sample(2, n, 2, vec![0.0], |_, x, o| {
        o[0] = x[1].sin() + x[0].sin();
        o[1] = (x[0] + x[1]).cos();
    });
    let at0 = representation_step(&state, 0.0, &mixed, &cfg)?;
    let same = at0.field.values() == leray_project(&mixed).values();
    let mut end = EstimateReport::new("representation_final_time", seed);
    end.value("max_se", at0.max_se).check(
        "t = 0 returns P phi bitwise",
        Verdict::from_bool(same && at0.max_se == 0.0),
        format!("bitwise {same}, se {}", at0.max_se),
    );
    Ok(Outcome::from_reports(vec![heat, grad, end]))
}

fn tg_config(p: &Params, seed: u64) -> NsRunConfig {
    NsRunConfig::new(p.usize("n"), p.f64("horizon"), p.usize("paths"), p.f64("dt"), seed)
        .with_sub_interval(p.f64("sub_interval"), p.f64("snapshot_every"))
        .with_tolerance(p.f64("tolerance"))
        .with_max_iterations(p.usize("max_iterations"))
        .with_upsample(p.usize("upsample"))
}

fn validate_taylor_green(p: &Params) -> Result<(), String> {
    all(&[
        grid_size(p, "n"),
        at_least(p, "paths", 2),
        at_least(p, "lp_paths", 2),
        at_least(p, "max_iterations", 1),
        at_least(p, "upsample", 1),
        positive(p, &["horizon", "dt", "sub_interval", "snapshot_every", "tolerance", "error_bound", "max_seconds", "w_delta", "w_bound"]),
        tg_config(p, 0).layout().map(|_| ()).map_err(|e| e.to_string()),
        {
            let (t, h, horizon) = (p.f64("w_t"), p.f64("w_delta"), p.f64("horizon"));
            if t - h < -horizon || t + h > 0.0 {
                Err("w stencil [w_t - w_delta, w_t + w_delta] must lie in [-T, 0]".into())
            } else {
                on_snapshots(&[t - h, t, t + h], p.f64("snapshot_every"), "w stencil")
            }
        },
        times_in_window(p.list("lp_times"), p.f64("horizon")),
    ])
}

fn on_snapshots(times: &[f64], every: f64, what: &str) -> Result<(), String> {
    for &t in times {
        let k = -t / every;
        if (k - k.round()).abs() > 1e-9 {
            return Err(format!("{what}: time {t} is not on the snapshot grid"));
        }
    }
    Ok(())
}

fn run_taylor_green(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let cfg = tg_config(p, seed);
    let n = cfg.n;
    let phi = taylor_green(n, 1.0);
    let exact = |t: f64| taylor_green(n, t.exp());

    let start = Instant::now();
    let state = picard_solve(&phi, &cfg)?;
    let secs = start.elapsed().as_secs_f64();
    let err = state.relative_error(exact);
    let mut pic = EstimateReport::new("picard", seed);
    pic.value("relative_error", err)
        .value("max_iterations", state.max_iterations() as f64)
        .value("windows", state.iterations.len() as f64)
        .value("max_se", state.max_se)
        .value("divergence", state.divergence());
    let mut table = String::from("window,iteration,residual\n");
    for (w, hist) in state.residuals.iter().enumerate() {
        for (k, r) in hist.iter().enumerate() {
            pic.row("iteration", (k + 1) as f64, format!("residual_w{w}"), *r, 0.0);
            table.push_str(&format!("{w},{},{r:?}\n", k + 1));
        }
    }
    let verdict = if state.converged && !state.inconclusive {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    pic.check("converged", verdict, format!("iterations per window {:?}", state.iterations))
        .check_le("iterations", state.max_iterations() as f64, 6.0)
        .check_le("relative error", err, p.f64("error_bound"))
        .check_le("divergence-free", state.divergence(), DIVERGENCE_TOLERANCE)
        .check(
            "runtime",
            Verdict::from_bool(secs <= p.f64("max_seconds")),
            format!("{secs:.1} s (budget {} s)", p.f64("max_seconds")),
        )
        .note(TWO_D_NOTE);

    let every = (p.f64("snapshot_every") / cfg.dt).round() as usize;
    let run = reference_spectral_ns(&phi, cfg.horizon, n, cfg.dt, every)?;
    let ref_err = run.state.relative_error(exact);
    let gap = state.relative_error(|t| run.state.snapshot(t).unwrap_or_else(|| exact(t)));
    let mut rf = EstimateReport::new("reference", seed);
    rf.value("relative_error", ref_err)
        .value("picard_gap", gap)
        .value("energy_residual", run.energy_residual)
        .check_le("exact decay", ref_err, 1e-6);

    let wcfg = WResidualConfig::new(p.f64("w_t"), p.f64("w_delta")).with_bound(p.f64("w_bound"));
    let w = w_equation_residual(&state, &phi, &cfg, &wcfg)?;

    let mut lp_cfg = cfg.clone();
    lp_cfg.paths = p.usize("lp_paths");
    let bump = ScalarFn::bump(&[3.4, 3.0], 0.5, 1.0);
    let mut lp = lp_persistence_check(&state, &bump, 2.0, p.list("lp_times"), &lp_cfg)?;
    lp.id = "lp_persistence_bump".into();

    let mut out = Outcome::from_reports(vec![pic, rf, w, lp]);
    out.fields.push(("u".into(), state.field));
    out.tables.push(("picard_residuals.csv".into(), table));
    Ok(out)
}

fn run_lp(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let (n, horizon, dt, paths, q) = (p.usize("n"), p.f64("horizon"), p.f64("dt"), p.usize("paths"), p.f64("q"));
    let steps = (horizon / dt).round() as usize;
    let cfg = NsRunConfig::new(n, horizon, paths, dt, seed).with_sub_interval(horizon, horizon);
    let times: Vec<f64> = (0..=steps).map(|k| -horizon + k as f64 * dt).map(|t| if t.abs() < 1e-12 { 0.0 } else { t }).collect();
    let zero = VelocityState::frozen(&PeriodicField::zeros(2, n, 2, vec![0.0]), times.clone());
    let mut tg = VelocityState::frozen(&taylor_green(n, 1.0), times.clone());
    let mut field = PeriodicField::zeros(2, n, 2, Vec::new());
    for &t in &times {
        field.push(t, taylor_green(n, t.exp()).snapshot(0));
    }
    tg.field = field;
    let cases = [
        ("constant", ScalarFn::Constant(1.5)),
        ("cos_x1", ScalarFn::cosine(&[1.0, 0.0], 1.0)),
        ("bump", ScalarFn::bump(&[3.4, 3.0], 0.5, 1.0)),
    ];
    let eval_times = p.list("times");
    let mut reports = Vec::new();
    for (uname, state) in [("zero", &zero), ("taylor_green", &tg)] {
        for (fname, f) in &cases {
            let mut rep = lp_persistence_check(state, f, q, eval_times, &cfg)?;
            rep.id = format!("lp:{uname}:{fname}");
            if *fname == "constant" {
                let rhs = rep.get("f_norm").unwrap_or(f64::NAN);
                let worst = rep
                    .rows
                    .iter()
                    .filter(|r| r.quantity == "lhs")
                    .map(|r| ((r.value - rhs) / rhs).abs())
                    .fold(0.0, f64::max);
                rep.check_le("constant preserved", worst, 1e-12);
            }
            if uname == "zero" && *fname == "cos_x1" {
                let rhs = rep.get("f_norm").unwrap_or(f64::NAN);
                let rows: Vec<(f64, f64, f64)> = rep
                    .rows
                    .iter()
                    .filter(|r| r.quantity == "lhs")
                    .map(|r| (r.axis_value, r.value, r.std_error))
                    .collect();
                let mut ok = true;
                let mut worst: f64 = 0.0;
                for (t, lhs, se) in rows {
                    let oracle = (-0.5 * t.abs()).exp() * rhs;
                    let dev = (lhs - oracle).abs();
                    worst = worst.max(dev);
                    ok &= dev <= 3.0 * se + dt && (t == 0.0 || lhs < rhs);
                }
                rep.check("heat-smoothed mode", Verdict::from_bool(ok), format!("max |lhs - e^(-|t|/2) |f|| = {worst:.3e}"));
            }
            reports.push(rep);
        }
    }
    Ok(Outcome::from_reports(reports))
}
