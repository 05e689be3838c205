//! Euler-Maruyama flows, the variational flow, its series and the Malliavin derivative.

use std::time::Instant;

use critflow::flow::{
    chaos_series_gradient, default_sigmas, malliavin_derivative, restart_flow, simulate_flow, variational_flow,
    FlowConfig,
};
use critflow::norms::DriftField;
use critflow::report::{mean_se, EstimateReport, Verdict};

use super::{aligned, all, at_least, dim, positive};
use crate::config::{float, int, list, Params};
use crate::registry::{Experiment, Outcome};

/// Fixed 3×3 matrix with spectral radius 1 (eigenvalues ±i and -1).
pub(crate) const LINEAR_A: [f64; 9] = [0.0, 1.0, 0.0, -1.0, 0.0, 0.5, 0.0, 0.0, -1.0];

pub(crate) fn experiments() -> Vec<Experiment> {
    vec![
        Experiment {
            id: "flow.zero_drift",
            module: "flow_sim",
            summary: "b = 0: paths equal x + W bitwise and both derivatives are the identity",
            default_seed: 1,
            params: vec![
                int("d", 3, "dimension"),
                int("paths", 10_000, "paths per point"),
                float("t", 0.1, "end time"),
                float("dt", 1e-3, "step"),
                float("max_seconds", 5.0, "runtime budget"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 1, 4),
                    at_least(p, "paths", 2),
                    positive(p, &["t", "dt", "max_seconds"]),
                    aligned(0.0, p.f64("t"), p.f64("dt"), "dt must divide [0, t]"),
                ])
            },
            run: run_zero,
        },
        Experiment {
            id: "flow.linear_drift",
            module: "flow_sim",
            summary: "b = Ax: gradient matches exp(A t) and series terms match A^n t^n / n!",
            default_seed: 2,
            params: vec![
                float("t", 1.0, "end time"),
                float("dt", 1e-3, "step"),
                int("paths", 4, "paths per point"),
                int("n_max", 4, "highest series order"),
            ],
            validate: |p| {
                all(&[
                    positive(p, &["t", "dt"]),
                    at_least(p, "paths", 1),
                    at_least(p, "n_max", 1),
                    if p.usize("n_max") > 6 { Err("`n_max` must be at most 6".into()) } else { Ok(()) },
                    aligned(0.0, p.f64("t"), p.f64("dt"), "dt must divide [0, t]"),
                ])
            },
            run: run_linear,
        },
        Experiment {
            id: "flow.fourth_moment",
            module: "flow_sim",
            summary: "b = 0: E|X_t - X_s|^4 = d(d+2)|t - s|^2 and restart composes bitwise",
            default_seed: 3,
            params: vec![
                int("d", 3, "dimension"),
                int("paths", 20_000, "paths"),
                float("dt", 0.01, "step"),
                list("gaps", &[0.05, 0.1, 0.2, 0.4], "time gaps |t - s| ending at the largest gap"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 1, 4),
                    at_least(p, "paths", 2),
                    positive(p, &["dt"]),
                    super::increasing_positive(p, "gaps", 1),
                    p.list("gaps")
                        .iter()
                        .try_for_each(|&g| aligned(0.0, g, p.f64("dt"), "dt must divide every gap")),
                ])
            },
            run: run_fourth,
        },
        Experiment {
            id: "flow.ou_moments",
            module: "flow_sim",
            summary: "b = -(x - c): mean and variance follow the Ornstein-Uhlenbeck closed form",
            default_seed: 4,
            params: vec![
                int("d", 2, "dimension"),
                int("paths", 20_000, "paths"),
                float("t", 1.0, "end time"),
                float("dt", 1e-3, "step"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 1, 4),
                    at_least(p, "paths", 2),
                    positive(p, &["t", "dt"]),
                    aligned(0.0, p.f64("t"), p.f64("dt"), "dt must divide [0, t]"),
                ])
            },
            run: run_ou,
        },
        Experiment {
            id: "flow.volume",
            module: "flow_sim",
            summary: "divergence-free drift: det of the gradient stays positive with sample mean near 1",
            default_seed: 5,
            params: vec![
                int("d", 3, "dimension"),
                int("paths", 4000, "paths"),
                float("t", 0.5, "end time"),
                float("dt", 0.01, "step"),
                float("amplitude", 1.0, "Taylor-Green amplitude"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 2, 3),
                    at_least(p, "paths", 2),
                    positive(p, &["t", "dt", "amplitude"]),
                    aligned(0.0, p.f64("t"), p.f64("dt"), "dt must divide [0, t]"),
                ])
            },
            run: run_volume,
        },
        Experiment {
            id: "flow.malliavin",
            module: "flow_sim",
            summary: "b = Ax: D_s X_t = exp(A(t - s)), zero for s > t, and the product identity",
            default_seed: 6,
            params: vec![float("t", 1.0, "end time"), float("dt", 1e-3, "step"), int("paths", 2, "paths")],
            validate: |p| {
                all(&[
                    positive(p, &["t", "dt"]),
                    at_least(p, "paths", 1),
                    aligned(0.0, p.f64("t"), p.f64("dt"), "dt must divide [0, t]"),
                ])
            },
            run: run_malliavin,
        },
    ]
}

fn matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut c = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            for j in 0..d {
                c[i * d + j] += a[i * d + k] * b[k * d + j];
            }
        }
    }
    c
}

fn identity(d: usize) -> Vec<f64> {
    (0..d * d).map(|i| if i % (d + 1) == 0 { 1.0 } else { 0.0 }).collect()
}

/// `exp(s A)` by scaling and squaring with a 20-term Taylor sum.
pub(crate) fn expm(a: &[f64], d: usize, s: f64) -> Vec<f64> {
    let norm: f64 = a.iter().map(|v| v.abs()).sum::<f64>() * s.abs();
    let squarings = norm.max(1.0).log2().ceil() as i32 + 4;
    let scale = s / 2f64.powi(squarings);
    let x: Vec<f64> = a.iter().map(|v| v * scale).collect();
    let mut sum = identity(d);
    let mut term = identity(d);
    for k in 1..=20 {
        term = matmul(&term, &x, d).into_iter().map(|v| v / k as f64).collect();
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum, d);
    }
    sum
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn det(a: &[f64], d: usize) -> f64 {
    match d {
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        _ => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
    }
}

fn run_zero(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let (d, paths, t, dt) = (p.usize("d"), p.usize("paths"), p.f64("t"), p.f64("dt"));
    let clock = Instant::now();
    let xs: Vec<f64> = (0..2 * d).map(|i| 0.5 + 0.37 * i as f64).collect();
    let cfg = FlowConfig::new(0.0, t, dt, paths, seed);
    let ens = simulate_flow(&DriftField::zero(d), &cfg, &xs)?;
    let steps = ens.checkpoint_step(ens.checkpoint_index(t)?);
    let source = cfg.source(d);
    let end = ens.checkpoint_index(t)?;
    let mut exact = true;
    for m in 0..paths {
        let w = source.increments(m as u64, 0, steps);
        for pi in 0..2 {
            let mut y = xs[pi * d..(pi + 1) * d].to_vec();
            for k in 0..steps {
                for a in 0..d {
                    y[a] += w[k * d + a];
                }
            }
            exact &= ens.state(end, pi, m) == &y[..];
        }
    }
    let jac = variational_flow(&ens)?;
    let sig = malliavin_derivative(&ens, &default_sigmas(0.0, t, dt))?;
    let id = identity(d);
    let mut grad_exact = true;
    for c in 0..jac.checkpoints.len() {
        for pi in 0..2 {
            for m in 0..paths {
                grad_exact &= jac.matrix(0, c, pi, m) == &id[..];
                grad_exact &= sig.matrix(0, c, pi, m) == &id[..];
            }
        }
    }
    let elapsed = clock.elapsed().as_secs_f64();
    let mut rep = EstimateReport::new("zero_drift_flow", seed);
    rep.value("paths", paths as f64).value("steps", steps as f64);
    rep.check("paths equal x + W", Verdict::from_bool(exact), "bitwise against direct noise summation");
    rep.check("derivatives are identity", Verdict::from_bool(grad_exact), "spatial and Malliavin, bitwise");
    rep.check("increment gate", Verdict::from_bool(ens.increment_gate()), "mean within 4/sqrt(M steps)");
    rep.check(
        "runtime",
        Verdict::from_bool(elapsed < p.f64("max_seconds")),
        format!("{elapsed:.2} s < {} s", p.f64("max_seconds")),
    );
    Ok(Outcome::from_reports(vec![rep]))
}

fn run_linear(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let (t, dt, paths, n_max) = (p.f64("t"), p.f64("dt"), p.usize("paths"), p.usize("n_max"));
    let d = 3;
    let b = DriftField::linear(&LINEAR_A, d);
    let xs = [0.3, -0.2, 1.1, 2.0, 0.5, -1.0];
    let ens = simulate_flow(&b, &FlowConfig::new(0.0, t, dt, paths, seed), &xs)?;
    let end = ens.checkpoint_index(t)?;
    let jac = variational_flow(&ens)?;
    let oracle = expm(&LINEAR_A, d, t);
    let mut worst: f64 = 0.0;
    for pi in 0..2 {
        for m in 0..paths {
            worst = worst.max(max_abs_diff(jac.matrix(0, end, pi, m), &oracle));
        }
    }
    let mut rep = EstimateReport::new("linear_drift_gradient", seed);
    rep.value("max_entry_error", worst);
    rep.check_le("gradient vs exp(At)", worst, 2.0 * dt);

    let series = chaos_series_gradient(&ens, n_max)?;
    let mut power = identity(d);
    let mut fact = 1.0;
    let mut series_ok = true;
    let mut prev_gap = f64::INFINITY;
    let mut gaps_decrease = true;
    for n in 1..=n_max {
        power = matmul(&power, &LINEAR_A, d);
        fact *= n as f64;
        let target: Vec<f64> = power.iter().map(|v| v * t.powi(n as i32) / fact).collect();
        let scale = target.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let got = series.terms[n].matrix(0, end, 0, 0);
        let rel = max_abs_diff(got, &target) / scale;
        series_ok &= rel <= 0.01;
        rep.row("n", n as f64, "term_rel_error", rel, 0.0);
        let gap = max_abs_diff(series.partial_sum(n).matrix(0, end, 0, 0), jac.matrix(0, end, 0, 0));
        rep.row("n", n as f64, "partial_sum_gap", gap, 0.0);
        gaps_decrease &= gap < prev_gap;
        prev_gap = gap;
    }
    rep.check("series terms", Verdict::from_bool(series_ok), "A^n t^n / n! within 1% of the largest entry");
    rep.check("partial sums approach the gradient", Verdict::from_bool(gaps_decrease), "gap strictly decreasing in n");
    Ok(Outcome::from_reports(vec![rep]))
}

fn run_fourth(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let (d, paths, dt) = (p.usize("d"), p.usize("paths"), p.f64("dt"));
    let gaps = p.list("gaps").to_vec();
    let t = *gaps.last().unwrap();
    let cps: Vec<f64> = gaps.iter().map(|g| t - g).collect();
    let x0 = vec![1.0; d];
    let ens = simulate_flow(&DriftField::zero(d), &FlowConfig::new(0.0, t, dt, paths, seed).with_checkpoints(&cps), &x0)?;
    let end = ens.checkpoint_index(t)?;
    let mut rep = EstimateReport::new("fourth_moment", seed);
    let mut ok = true;
    for &g in &gaps {
        let c = ens.checkpoint_index(t - g)?;
        let samples: Vec<f64> = (0..paths)
            .map(|m| {
                let r2: f64 = ens.state(c, 0, m).iter().zip(ens.state(end, 0, m)).map(|(a, b)| (a - b).powi(2)).sum();
                r2 * r2
            })
            .collect();
        let (mean, se) = mean_se(&samples);
        let exact = (d * (d + 2)) as f64 * g * g;
        ok &= (mean - exact).abs() <= 3.0 * se;
        rep.row("gap", g, "moment", mean, se).row("gap", g, "exact", exact, 0.0);
    }
    rep.check("Gaussian fourth moment", Verdict::from_bool(ok), "every gap within 3 SE");

    let mid = t - gaps[0];
    let restarted = restart_flow(&ens, mid, t, &[])?;
    let re = restarted.checkpoint_index(t)?;
    let bitwise = (0..paths).all(|m| restarted.state(re, 0, m) == ens.state(end, 0, m));
    rep.check("restart composes", Verdict::from_bool(bitwise), "bitwise at the end time");
    Ok(Outcome::from_reports(vec![rep]))
}

fn run_ou(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let (d, paths, t, dt) = (p.usize("d"), p.usize("paths"), p.f64("t"), p.f64("dt"));
    let center = vec![std::f64::consts::PI; d];
    let b = DriftField::ornstein_uhlenbeck(d, 1.0, &center);
    let x0: Vec<f64> = (0..d).map(|a| 1.0 + 0.5 * a as f64).collect();
    let half = (t / dt / 2.0).round() * dt;
    let ens = simulate_flow(&b, &FlowConfig::new(0.0, t, dt, paths, seed).with_checkpoints(&[half]), &x0)?;
    let mut rep = EstimateReport::new("ou_moments", seed);
    let mut mean_ok = true;
    let mut var_ok = true;
    for (c, &time) in ens.checkpoints().iter().enumerate() {
        if time == 0.0 {
            continue;
        }
        let (mean, var) = ens.moments(c, 0);
        let decay = (-time).exp();
        let var_exact = (1.0 - (-2.0 * time).exp()) / 2.0;
        let var_se = var_exact * (2.0 / (paths as f64 - 1.0)).sqrt();
        for a in 0..d {
            let m_exact = center[a] + (x0[a] - center[a]) * decay;
            let se = (var[a] / paths as f64).sqrt();
            mean_ok &= (mean[a] - m_exact).abs() <= 3.0 * se;
            var_ok &= (var[a] - var_exact).abs() <= 3.0 * var_se + dt;
            rep.row("t", time, format!("mean[{a}]"), mean[a], se);
            rep.row("t", time, format!("var[{a}]"), var[a], var_se);
        }
    }
    rep.check("mean", Verdict::from_bool(mean_ok), "within 3 SE of c + (x - c) e^{-t}");
    rep.check("variance", Verdict::from_bool(var_ok), "within 3 SE + dt of (1 - e^{-2t}) / 2");
    Ok(Outcome::from_reports(vec![rep]))
}

fn run_volume(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let (d, paths, t, dt) = (p.usize("d"), p.usize("paths"), p.f64("t"), p.f64("dt"));
    let b = DriftField::taylor_green(d, p.f64("amplitude"));
    let x0: Vec<f64> = [0.7, 1.9, 2.6][..d].to_vec();
    let ens = simulate_flow(&b, &FlowConfig::new(0.0, t, dt, paths, seed), &x0)?;
    let jac = variational_flow(&ens)?;
    let c = ens.checkpoint_index(t)?;
    let dets: Vec<f64> = (0..paths).map(|m| det(jac.matrix(0, c, 0, m), d)).collect();
    let (mean, se) = mean_se(&dets);
    let min = dets.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut rep = EstimateReport::new("volume", seed);
    rep.value("det_mean", mean).value("det_se", se).value("det_min", min);
    rep.check_ge("det positive", min, f64::MIN_POSITIVE);
    // Euler products carry an O(dt) bias in the determinant
    rep.check_le("mean det near 1", (mean - 1.0).abs(), 3.0 * se + 0.5 * dt);
    Ok(Outcome::from_reports(vec![rep]))
}

fn run_malliavin(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let (t, dt, paths) = (p.f64("t"), p.f64("dt"), p.usize("paths"));
    let d = 3;
    let b = DriftField::linear(&LINEAR_A, d);
    let sigmas = default_sigmas(0.0, t, dt);
    let mid = sigmas[3];
    let ens = simulate_flow(&b, &FlowConfig::new(0.0, t, dt, paths, seed).with_checkpoints(&sigmas), &[0.4, 0.1, -0.3])?;
    let rec = malliavin_derivative(&ens, &sigmas)?;
    let end = ens.checkpoint_index(t)?;
    let cm = ens.checkpoint_index(mid)?;
    let mut rep = EstimateReport::new("malliavin", seed);
    let mut worst: f64 = 0.0;
    let mut zero_ok = true;
    for (si, &s) in sigmas.iter().enumerate() {
        let oracle = expm(&LINEAR_A, d, t - s);
        let err = max_abs_diff(rec.matrix(si, end, 0, 0), &oracle);
        worst = worst.max(err);
        rep.row("sigma", s, "max_entry_error", err, 0.0);
        if s > mid {
            zero_ok &= rec.matrix(si, cm, 0, 0).iter().all(|v| *v == 0.0);
        }
    }
    let mut product: f64 = 0.0;
    for i in 0..sigmas.len() {
        for j in i + 1..sigmas.len() {
            let (a, b2) = (rec.matrix(i, end, 0, 0), rec.matrix(j, end, 0, 0));
            let inner = rec.matrix(i, ens.checkpoint_index(sigmas[j])?, 0, 0);
            let lhs: Vec<f64> = a.iter().zip(b2).map(|(x, y)| x - y).collect();
            let shifted: Vec<f64> = inner.iter().zip(identity(d)).map(|(x, e)| x - e).collect();
            let rhs = matmul(b2, &shifted, d);
            product = product.max(max_abs_diff(&lhs, &rhs));
        }
    }
    rep.value("max_entry_error", worst).value("product_residual", product);
    rep.check_le("D_s X_t vs exp(A(t - s))", worst, 2.0 * dt);
    rep.check("zero before the base time", Verdict::from_bool(zero_ok), "D_s X_t = 0 for s > t, exact");
    rep.check_le("product identity", product, 10.0 * dt);
    Ok(Outcome::from_reports(vec![rep]))
}
