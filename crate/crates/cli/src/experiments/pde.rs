//! Backward Kolmogorov solves, Feynman-Kac dualities and parabolic norm probes.

use critflow::norms::{mollify, DriftField, MixedNormSpec, ScalarFn};
use critflow::pde::{
    apriori_probe, feynman_kac_check, iterated_integral_duality, parabolic_embedding_probe, solve_kolmogorov,
    zero_order_probe, DualityConfig, EmbeddingCase, Forcing, IteratedFactor, KolmogorovProblem, SolveSetup,
};
use critflow::report::{EstimateReport, Verdict};

use super::{aligned, all, at_least, dim, gamma, grid_size, levels, positive};
use crate::config::{float, int, list, Params};
use crate::registry::{Experiment, Outcome};

pub(crate) fn experiments() -> Vec<Experiment> {
    vec![
        Experiment {
            id: "pde.feynman_kac",
            module: "kolmogorov_pde",
            summary: "E of the path integral of g equals the backward solution u(S0, x) for zero, OU and mollified singular drift",
            default_seed: 11,
            params: vec![
                int("d", 2, "dimension"),
                int("n", 32, "PDE grid per axis"),
                int("paths", 100_000, "Monte Carlo paths per point"),
                float("t", 0.5, "window length"),
                float("dt", 1e-3, "step"),
                float("gamma", 0.5, "singular exponent"),
                int("m", 16, "mollification level of the singular drift"),
                float("dt_factor", 5.0, "tolerance is 3 SE + dt_factor dt"),
                float("max_seconds", 120.0, "runtime budget per drift"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 2, 3),
                    grid_size(p, "n"),
                    at_least(p, "paths", 2),
                    at_least(p, "m", 1),
                    positive(p, &["t", "dt", "dt_factor", "max_seconds"]),
                    gamma(p),
                    aligned(0.0, p.f64("t"), p.f64("dt"), "dt must divide [0, t]"),
                ])
            },
            run: run_feynman_kac,
        },
        Experiment {
            id: "pde.iterated",
            module: "kolmogorov_pde",
            summary: "two-fold simplex integral by Monte Carlo equals the nested backward recursion",
            default_seed: 12,
            params: vec![
                int("d", 2, "dimension"),
                int("n", 16, "PDE grid per axis"),
                int("paths", 100_000, "Monte Carlo paths per point"),
                float("t", 1.0, "window length"),
                float("dt", 1e-3, "step"),
                list("windows", &[0.125, 0.25, 0.5, 1.0], "window lengths of the growth fit"),
                float("dt_factor", 10.0, "tolerance is 3 SE + dt_factor dt"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 1, 3),
                    grid_size(p, "n"),
                    at_least(p, "paths", 2),
                    positive(p, &["t", "dt", "dt_factor"]),
                    aligned(0.0, p.f64("t"), p.f64("dt"), "dt must divide [0, t]"),
                    super::increasing_positive(p, "windows", 2),
                    p.list("windows")
                        .iter()
                        .try_for_each(|&w| aligned(0.0, w, p.f64("dt"), "dt must divide every window")),
                ])
            },
            run: run_iterated,
        },
        Experiment {
            id: "pde.apriori",
            module: "kolmogorov_pde",
            summary: "a-priori ratio: closed form for b = 0, bounded spread across mollification levels of b_gamma",
            default_seed: 0,
            params: vec![
                int("d", 2, "dimension"),
                int("n", 32, "grid per axis"),
                float("t", 0.5, "window length"),
                float("dt", 1e-3, "step"),
                float("p", 4.0, "spatial exponent"),
                float("q", 4.0, "temporal exponent"),
                float("gamma", 0.5, "singular exponent"),
                list("levels", &[4.0, 8.0, 16.0, 32.0], "mollification levels"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 2, 3),
                    grid_size(p, "n"),
                    positive(p, &["t", "dt"]),
                    gamma(p),
                    levels(p, "levels", 2),
                    exponents(p),
                    aligned(0.0, p.f64("t"), p.f64("dt"), "dt must divide [0, t]"),
                ])
            },
            run: run_apriori,
        },
        Experiment {
            id: "pde.zero_order",
            module: "kolmogorov_pde",
            summary: "heat equation with zero-order term: a-priori ratio bounded uniformly in lambda",
            default_seed: 0,
            params: vec![
                int("d", 2, "dimension"),
                int("n", 32, "grid per axis"),
                float("t", 0.5, "window length"),
                float("dt", 1e-3, "step"),
                float("p", 2.0, "spatial exponent"),
                float("q", 2.0, "temporal exponent"),
                list("lambdas", &[0.0, 1.0, 10.0, 100.0], "zero-order coefficients"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 1, 3),
                    grid_size(p, "n"),
                    positive(p, &["t", "dt"]),
                    exponents(p),
                    if p.list("lambdas").iter().all(|&l| l >= 0.0 && l.is_finite()) && !p.list("lambdas").is_empty() {
                        Ok(())
                    } else {
                        Err("`lambdas` must be finite and nonnegative".into())
                    },
                    aligned(0.0, p.f64("t"), p.f64("dt"), "dt must divide [0, t]"),
                ])
            },
            run: run_zero_order,
        },
        Experiment {
            id: "pde.embedding",
            module: "kolmogorov_pde",
            summary: "parabolic Sobolev and Morrey ratios finite and stable under grid and step refinement",
            default_seed: 0,
            params: vec![
                int("n", 32, "coarse grid per axis (d = 2)"),
                float("t", 0.5, "window length"),
                float("dt", 2e-3, "coarse step"),
                float("width", 0.8, "width of the bump forcing"),
                float("stability", 0.1, "allowed relative change under refinement"),
            ],
            validate: |p| {
                all(&[
                    grid_size(p, "n"),
                    positive(p, &["t", "dt", "width", "stability"]),
                    aligned(0.0, p.f64("t"), p.f64("dt"), "dt must divide [0, t]"),
                ])
            },
            run: run_embedding,
        },
    ]
}

fn exponents(p: &Params) -> Result<(), String> {
    let (a, b) = (p.f64("p"), p.f64("q"));
    if !(a > 1.0 && b > 1.0) {
        return Err(format!("exponents must exceed 1, got p={a} q={b}"));
    }
    Ok(())
}

fn test_points(d: usize) -> Vec<Vec<f64>> {
    let base = [[2.6, 3.3, 3.0], [3.5, 2.9, 3.4], [3.1, 3.8, 2.7]];
    base.iter().map(|x| x[..d].to_vec()).collect()
}

fn run_feynman_kac(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let d = p.usize("d");
    let center = vec![std::f64::consts::PI; d];
    let drifts = [
        ("zero", DriftField::zero(d)),
        ("ou", DriftField::ornstein_uhlenbeck(d, 1.0, &center)),
        ("mollified_singular", mollify(&DriftField::singular(d, p.f64("gamma"))?, p.usize("m") as u32)?),
    ];
    let mut k = vec![0.0; d];
    k[0] = 1.0;
    k[1] = 1.0;
    let g = ScalarFn::cosine(&k, 1.0);
    let cfg = DualityConfig::new(p.usize("n"), p.f64("dt"), p.usize("paths"), seed).with_dt_factor(p.f64("dt_factor"));
    let mut reports = Vec::new();
    for (name, b) in drifts {
        let clock = std::time::Instant::now();
        let mut rep = feynman_kac_check(&b, &g, 0.0, p.f64("t"), &test_points(d), &cfg)?;
        let secs = clock.elapsed().as_secs_f64();
        rep.id = format!("feynman_kac:{name}");
        rep.check(
            "runtime",
            Verdict::from_bool(secs < p.f64("max_seconds")),
            format!("{secs:.1} s < {} s", p.f64("max_seconds")),
        );
        reports.push(rep);
    }
    Ok(Outcome::from_reports(reports))
}

fn run_iterated(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let d = p.usize("d");
    let mut k = vec![0.0; d];
    k[0] = 1.0;
    let f = ScalarFn::cosine(&k, 1.0);
    let factors = [IteratedFactor { f: f.clone(), axis: 0 }, IteratedFactor { f, axis: 0 }];
    let cfg = DualityConfig::new(p.usize("n"), p.f64("dt"), p.usize("paths"), seed).with_dt_factor(p.f64("dt_factor"));
    let rep = iterated_integral_duality(
        &DriftField::zero(d),
        &factors,
        0.0,
        p.f64("t"),
        &test_points(d),
        &cfg,
        p.list("windows"),
    )?;
    Ok(Outcome::from_reports(vec![rep]))
}

/// Closed-form a-priori ratio for `f = cos(x_1)`, `b = 0`, `α = 0` on `[0, T]`.
///
/// Backward solution `u = c(t) cos x_1` with `c = 2(1 - e^{-(T-t)/2})` and
/// `∂_t u = -e^{-(T-t)/2} cos x_1`; the Bessel factor of order 2 on `|k| = 1`
/// is 2 and the spatial norms of `cos x_1` cancel.
fn heat_mode_ratio(t: f64, q: f64) -> f64 {
    let steps = 20_000;
    let h = t / steps as f64;
    let simpson = |f: &dyn Fn(f64) -> f64| {
        let mut s = f(0.0) + f(t);
        for i in 1..steps {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0
    };
    let du = simpson(&|s: f64| (-(t - s) / 2.0).exp().powf(q)).powf(1.0 / q);
    let u = 2.0 * simpson(&|s: f64| (2.0 * (1.0 - (-(t - s) / 2.0).exp())).powf(q)).powf(1.0 / q);
    (du + u) / t.powf(1.0 / q)
}

fn run_apriori(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let (d, n, t, dt) = (p.usize("d"), p.usize("n"), p.f64("t"), p.f64("dt"));
    let spec = MixedNormSpec::new(d, p.f64("p"), p.f64("q"));
    let setup = SolveSetup::new(0.0, t, n, dt);
    let mut k = vec![0.0; d];
    k[0] = 1.0;
    let cos = ("cos_x1".to_string(), Forcing::Scalar(ScalarFn::cosine(&k, 1.0)));

    let mut heat = apriori_probe(&DriftField::zero(d), std::slice::from_ref(&cos), &spec, 0.0, &[], &setup)?;
    heat.id = "apriori:zero_drift".into();
    heat.seed = seed;
    let exact = heat_mode_ratio(t, p.f64("q"));
    let got = heat.get("max_ratio").unwrap_or(f64::NAN);
    heat.value("closed_form", exact);
    heat.check_le("ratio vs closed form", (got - exact).abs() / exact, 0.01);

    let zero = ("zero".to_string(), Forcing::Zero);
    let mut z = apriori_probe(&DriftField::zero(d), &[zero], &spec, 0.0, &[], &setup)?;
    z.id = "apriori:zero_forcing".into();
    z.seed = seed;
    let zr = z.get("max_ratio").unwrap_or(f64::NAN);
    z.check("zero forcing gives ratio 0", Verdict::from_bool(zr == 0.0), format!("{zr}"));

    let bump = ("bump".to_string(), Forcing::Scalar(ScalarFn::bump(&vec![2.0; d], 1.0, 1.0)));
    let mut sing = apriori_probe(
        &DriftField::singular(d, p.f64("gamma"))?,
        &[cos, bump],
        &spec,
        0.0,
        &p.levels("levels"),
        &setup,
    )?;
    sing.id = "apriori:singular".into();
    sing.seed = seed;
    Ok(Outcome::from_reports(vec![heat, z, sing]))
}

fn run_zero_order(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let d = p.usize("d");
    let spec = MixedNormSpec::new(d, p.f64("p"), p.f64("q"));
    let setup = SolveSetup::new(0.0, p.f64("t"), p.usize("n"), p.f64("dt"));
    let mut k = vec![0.0; d];
    k[0] = 2.0;
    let f = Forcing::Scalar(ScalarFn::cosine(&k, 1.0));
    let mut rep = zero_order_probe(&f, p.list("lambdas"), &spec, &setup)?;
    rep.seed = seed;
    Ok(Outcome::from_reports(vec![rep]))
}

fn embedding_cases() -> [EmbeddingCase; 3] {
    [
        EmbeddingCase::Sobolev1 { alpha: 0.0, p: 2.0, q: 2.0, r: 4.0, s: 4.0 },
        EmbeddingCase::Sobolev2 { alpha: 0.0, p: 1.5, q: 1.5, r: 6.0, s: 6.0 },
        EmbeddingCase::Morrey { alpha: 0.0, p: 2.0, q: 2.0, theta: 0.25 },
    ]
}

fn embedding_ratios(n: usize, t: f64, dt: f64, width: f64) -> critflow::Result<(EstimateReport, Vec<f64>)> {
    let g = Forcing::Scalar(ScalarFn::bump(&[2.5, 3.5], width, 1.0));
    let record = ((t / dt) / 64.0).round().max(1.0) as usize;
    let sol = solve_kolmogorov(
        &KolmogorovProblem::backward(DriftField::zero(2), g, 0.0, t, n, dt).with_record_every(record),
    )?;
    let rep = parabolic_embedding_probe(&sol.solution, &sol.time_derivative, &embedding_cases())?;
    let ratios = embedding_cases()
        .iter()
        .map(|c| rep.get(&format!("{}:ratio", c.label())).unwrap_or(f64::NAN))
        .collect();
    Ok((rep, ratios))
}

fn run_embedding(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let (n, t, dt, w) = (p.usize("n"), p.f64("t"), p.f64("dt"), p.f64("width"));
    let (mut base, r0) = embedding_ratios(n, t, dt, w)?;
    let (_, r_grid) = embedding_ratios(2 * n, t, dt, w)?;
    let (_, r_step) = embedding_ratios(n, t, dt / 2.0, w)?;
    base.id = "parabolic_embedding".into();
    base.seed = seed;
    let tol = p.f64("stability");
    let mut worst: f64 = 0.0;
    for (i, case) in embedding_cases().iter().enumerate() {
        for (axis, refined) in [("grid", r_grid[i]), ("step", r_step[i])] {
            let rel = (refined - r0[i]).abs() / r0[i];
            worst = worst.max(rel);
            base.row(format!("refine_{axis}"), i as f64, format!("ratio:{}", case.label()), refined, 0.0);
        }
        base.row("refine_none", i as f64, format!("ratio:{}", case.label()), r0[i], 0.0);
    }
    base.value("worst_relative_change", worst);
    base.check_le("stable under refinement", worst, tol);
    Ok(Outcome::from_reports(vec![base]))
}
