//! Krylov bounds, Hölder and gradient moments, compactness statistics and Cauchy convergence.

use critflow::estimators::{
    cauchy_convergence, gradient_moment, holder_moments, krylov_check, malliavin_stats, PairAxis, Region,
};
use critflow::flow::FlowConfig;
use critflow::norms::{mixed_norm, DriftField, MixedNormSpec, ScalarFn};
use critflow::report::Verdict;

use super::flow::{expm, LINEAR_A};
use super::{aligned, all, at_least, dim, gamma, grid_size, levels, mollified_levels, positive};
use crate::config::{float, int, list, Params};
use crate::registry::{Experiment, Outcome};

fn window(p: &Params) -> Result<(), String> {
    all(&[positive(p, &["t", "dt"]), aligned(0.0, p.f64("t"), p.f64("dt"), "dt must divide [0, t]")])
}

fn scales_fit(p: &Params) -> Result<(), String> {
    let t = p.f64("t");
    let v = p.list("scales");
    if v.iter().any(|&h| !(h > 0.0 && h < t)) {
        return Err("`scales` must lie in (0, t)".into());
    }
    v.iter().try_for_each(|&h| aligned(0.0, h, p.f64("dt"), "dt must divide every scale"))
}

fn beta(p: &Params) -> Result<(), String> {
    let b = p.f64("beta");
    if !(b > 0.0 && b < 0.5) {
        return Err(format!("`beta` must lie in (0, 1/2), got {b}"));
    }
    Ok(())
}

pub(crate) fn experiments() -> Vec<Experiment> {
    vec![
        Experiment {
            id: "holder.zero_drift",
            module: "estimator_suite",
            summary: "b = 0: time-increment moment slope 2 for r = 4 and space slope r with zero residual",
            default_seed: 21,
            params: vec![
                int("d", 3, "dimension"),
                int("paths", 20_000, "paths"),
                float("t", 0.5, "end time"),
                float("dt", 1.0 / 800.0, "step"),
                float("r", 4.0, "moment order"),
                float("beta", 0.45, "Hölder exponent"),
                list("scales", &[0.01, 0.02, 0.04, 0.08, 0.16], "increments"),
            ],
            validate: |p| {
                all(&[dim(p, 1, 3), at_least(p, "paths", 2), window(p), beta(p), scales_fit(p), positive(p, &["r"])])
            },
            run: run_holder_zero,
        },
        Experiment {
            id: "holder.mollified",
            module: "estimator_suite",
            summary: "time-increment slope at least 0.9 beta r for mollified b_gamma, near 2 for OU",
            default_seed: 22,
            params: vec![
                int("d", 3, "dimension"),
                int("paths", 20_000, "paths"),
                float("t", 0.5, "end time"),
                float("dt", 1.0 / 800.0, "step"),
                float("r", 4.0, "moment order"),
                float("beta", 0.45, "Hölder exponent"),
                float("gamma", 0.5, "singular exponent"),
                int("m", 16, "mollification level"),
                list("scales", &[0.01, 0.02, 0.04, 0.08, 0.16], "increments"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 2, 3),
                    at_least(p, "paths", 2),
                    at_least(p, "m", 1),
                    window(p),
                    beta(p),
                    gamma(p),
                    scales_fit(p),
                    positive(p, &["r"]),
                ])
            },
            run: run_holder_mollified,
        },
        Experiment {
            id: "krylov.zero_drift",
            module: "estimator_suite",
            summary: "b = 0: Krylov constant matches the Gaussian oracle and is linear in f",
            default_seed: 23,
            params: vec![
                int("d", 3, "dimension"),
                int("paths", 1000, "paths per point"),
                int("per_axis", 8, "x-grid points per axis"),
                int("n", 16, "grid for the norm of f"),
                float("t", 0.25, "end time"),
                float("dt", 0.005, "step"),
                float("p", 4.0, "spatial exponent"),
                float("q", 4.0, "temporal exponent"),
            ],
            validate: |p| {
                all(&[dim(p, 1, 3), at_least(p, "paths", 2), at_least(p, "per_axis", 1), grid_size(p, "n"), window(p), krylov_spec(p)])
            },
            run: run_krylov_zero,
        },
        Experiment {
            id: "krylov.mollified",
            module: "estimator_suite",
            summary: "Krylov constant for mollified b_gamma stays within 2x across levels",
            default_seed: 24,
            params: vec![
                int("d", 3, "dimension"),
                int("paths", 500, "paths per point"),
                int("per_axis", 4, "x-grid points per axis"),
                int("n", 16, "grid for the norm of f"),
                float("t", 0.25, "end time"),
                float("dt", 0.005, "step"),
                float("p", 4.0, "spatial exponent"),
                float("q", 4.0, "temporal exponent"),
                float("gamma", 0.5, "singular exponent"),
                list("levels", &[4.0, 8.0, 16.0, 32.0], "mollification levels"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 2, 3),
                    at_least(p, "paths", 2),
                    at_least(p, "per_axis", 1),
                    grid_size(p, "n"),
                    window(p),
                    krylov_spec(p),
                    gamma(p),
                    levels(p, "levels", 2),
                ])
            },
            run: run_krylov_mollified,
        },
        Experiment {
            id: "gradient.uniformity",
            module: "estimator_suite",
            summary: "gradient moment grows with t and stays within 2x across mollification levels",
            default_seed: 25,
            params: vec![
                int("d", 2, "dimension"),
                int("paths", 400, "paths per point"),
                int("per_axis", 4, "region points per axis"),
                float("t", 0.25, "end time"),
                float("dt", 1.0 / 400.0, "step"),
                float("r", 2.0, "moment order"),
                float("p", 2.0, "spatial exponent"),
                float("gamma", 0.5, "singular exponent"),
                list("levels", &[4.0, 8.0, 16.0, 32.0], "mollification levels"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 2, 3),
                    at_least(p, "paths", 2),
                    at_least(p, "per_axis", 1),
                    window(p),
                    gamma(p),
                    levels(p, "levels", 2),
                    if p.f64("r") >= 2.0 && p.f64("p") >= 1.0 { Ok(()) } else { Err("need r >= 2 and p >= 1".into()) },
                ])
            },
            run: run_gradient,
        },
        Experiment {
            id: "compactness.malliavin",
            module: "estimator_suite",
            summary: "H^1 energy, Malliavin energy and Hölder quotient bounded across mollification levels",
            default_seed: 26,
            params: vec![
                int("d", 2, "dimension"),
                int("paths", 200, "paths per point"),
                int("per_axis", 3, "region points per axis"),
                float("t", 0.25, "end time"),
                float("dt", 1.0 / 448.0, "step"),
                float("h", 0.05, "finite-difference spacing"),
                float("beta", 0.25, "Hölder exponent of the quotient"),
                float("gamma", 0.5, "singular exponent"),
                list("levels", &[4.0, 8.0, 16.0, 32.0], "mollification levels"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 2, 3),
                    at_least(p, "paths", 2),
                    at_least(p, "per_axis", 1),
                    window(p),
                    positive(p, &["h", "beta"]),
                    gamma(p),
                    levels(p, "levels", 2),
                ])
            },
            run: run_malliavin,
        },
        Experiment {
            id: "compactness.cauchy",
            module: "estimator_suite",
            summary: "L^2 distances between flows of consecutive mollification levels decrease",
            default_seed: 27,
            params: vec![
                int("d", 2, "dimension"),
                int("paths", 400, "paths per point"),
                int("per_axis", 4, "region points per axis"),
                float("t", 0.25, "end time"),
                float("dt", 1.0 / 400.0, "step"),
                float("gamma", 0.5, "singular exponent"),
                list("levels", &[4.0, 8.0, 16.0, 32.0, 64.0], "mollification levels"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 2, 3),
                    at_least(p, "paths", 2),
                    at_least(p, "per_axis", 1),
                    window(p),
                    gamma(p),
                    levels(p, "levels", 3),
                ])
            },
            run: run_cauchy,
        },
    ]
}

fn krylov_spec(p: &Params) -> Result<(), String> {
    let (d, a, b) = (p.usize("d") as f64, p.f64("p"), p.f64("q"));
    if !(a > 1.0 && b > 1.0) || d / a + 2.0 / b >= 2.0 {
        return Err(format!("need p, q > 1 and d/p + 2/q < 2, got p={a} q={b}"));
    }
    Ok(())
}

fn start(d: usize) -> Vec<f64> {
    [2.4, 2.9, 3.7][..d].to_vec()
}

fn run_holder_zero(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let d = p.usize("d");
    let cfg = FlowConfig::new(0.0, p.f64("t"), p.f64("dt"), p.usize("paths"), seed);
    let (r, beta) = (p.f64("r"), p.f64("beta"));
    let scales = p.list("scales");
    let x0 = start(d);
    let b = DriftField::zero(d);
    let mut time = holder_moments(&b, &x0, r, beta, PairAxis::Time, &cfg, scales)?;
    let slope = time.get("slope").unwrap_or(f64::NAN);
    // E|W_h|^r scales as h^{r/2}
    time.check_le("slope equals r/2", (slope - 0.5 * r).abs(), 0.05);
    let space_cfg = FlowConfig::new(0.0, p.f64("t"), p.f64("dt"), 64.min(p.usize("paths")), seed);
    let mut space = holder_moments(&b, &x0, r, beta, PairAxis::Space, &space_cfg, scales)?;
    let (s_slope, resid) = (space.get("slope").unwrap_or(f64::NAN), space.get("residual").unwrap_or(f64::NAN));
    space.check_le("slope equals r", (s_slope - r).abs(), 1e-9);
    space.check_le("zero residual", resid, 1e-9);
    let start_axis = holder_moments(&b, &x0, r, beta, PairAxis::Start, &cfg, scales)?;
    Ok(Outcome::from_reports(vec![time, space, start_axis]))
}

fn run_holder_mollified(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let d = p.usize("d");
    let cfg = FlowConfig::new(0.0, p.f64("t"), p.f64("dt"), p.usize("paths"), seed);
    let (r, beta) = (p.f64("r"), p.f64("beta"));
    let x0 = start(d);
    let (_, b) = mollified_levels(d, p.f64("gamma"), &[p.usize("m") as u32])?.remove(0);
    let mut sing = holder_moments(&b, &x0, r, beta, PairAxis::Time, &cfg, p.list("scales"))?;
    sing.id = "holder_moments_t:mollified_singular".into();
    let ou = DriftField::ornstein_uhlenbeck(d, 1.0, &vec![std::f64::consts::PI; d]);
    let mut o = holder_moments(&ou, &x0, r, beta, PairAxis::Time, &cfg, p.list("scales"))?;
    o.id = "holder_moments_t:ou".into();
    let slope = o.get("slope").unwrap_or(f64::NAN);
    o.check_le("slope near r/2", (slope - 0.5 * r).abs(), 0.2);
    Ok(Outcome::from_reports(vec![sing, o]))
}

/// `f = 1.5 + cos(x_1 + x_2) + 0.5 sin(x_d)` as Fourier modes (first term dropped for d = 1).
fn krylov_test_function(d: usize) -> Vec<(f64, [f64; 4], f64)> {
    let mut modes = vec![(1.5, [0.0; 4], 0.0)];
    let mut k = [0.0; 4];
    k[0] = 1.0;
    if d > 1 {
        k[1] = 1.0;
    }
    modes.push((1.0, k, 0.0));
    let mut k2 = [0.0; 4];
    k2[d - 1] = 1.0;
    modes.push((0.5, k2, -0.5 * std::f64::consts::PI));
    modes
}

/// `E dt Σ_{j<N} f(x + W_{j dt})` in closed form: each mode is damped by
/// `e^{-|k|² j dt / 2}`, summed geometrically.
fn heat_oracle(modes: &[(f64, [f64; 4], f64)], x: &[f64], dt: f64, steps: usize) -> f64 {
    modes
        .iter()
        .map(|(amp, k, phase)| {
            let k2: f64 = k.iter().map(|v| v * v).sum();
            let ratio = (-0.5 * k2 * dt).exp();
            let sum = if k2 == 0.0 { steps as f64 } else { (1.0 - ratio.powi(steps as i32)) / (1.0 - ratio) };
            let kx: f64 = x.iter().zip(k).map(|(a, b)| a * b).sum();
            amp * (kx + phase).cos() * dt * sum
        })
        .sum()
}

fn run_krylov_zero(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let d = p.usize("d");
    let (t, dt) = (p.f64("t"), p.f64("dt"));
    let cfg = FlowConfig::new(0.0, t, dt, p.usize("paths"), seed);
    let spec = MixedNormSpec::new(d, p.f64("p"), p.f64("q"));
    let region = Region::torus(d, p.usize("per_axis"));
    let modes = krylov_test_function(d);
    let f = ScalarFn::Modes(modes.clone());
    let mut rep = krylov_check(&[(0.0, DriftField::zero(d))], &[("modes".into(), f.clone())], &spec, &cfg, &region, p.usize("n"))?;
    let steps = (t / dt).round() as usize;
    let oracle_lhs = region
        .points()
        .chunks(d)
        .map(|x| heat_oracle(&modes, x, dt, steps))
        .fold(f64::NEG_INFINITY, f64::max);
    let norm = mixed_norm(&f.sample(d, p.usize("n")), &spec, (0.0, t))?;
    let row = rep
        .rows
        .iter()
        .find(|r| r.axis == "scale" && r.axis_value == 1.0)
        .cloned()
        .expect("unit-scale row");
    let c_mc = row.value / norm;
    let c_oracle = oracle_lhs / norm;
    rep.value("constant_oracle", c_oracle);
    rep.value("constant_mc", c_mc);
    rep.check_le("constant vs Gaussian oracle", (c_mc - c_oracle).abs(), 3.0 * row.std_error / norm);
    let one = krylov_check(
        &[(0.0, DriftField::zero(d))],
        &[("one".into(), ScalarFn::Constant(1.0))],
        &spec,
        &cfg,
        &Region::torus(d, 2),
        p.usize("n"),
    )?;
    let lhs_one = one.rows.iter().find(|r| r.axis == "scale" && r.axis_value == 1.0).map(|r| r.value).unwrap_or(f64::NAN);
    rep.value("constant_function_lhs", lhs_one);
    rep.check_le("f = 1 gives the window length", (lhs_one - t).abs(), 1e-12);
    Ok(Outcome::from_reports(vec![rep]))
}

fn run_krylov_mollified(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let d = p.usize("d");
    let cfg = FlowConfig::new(0.0, p.f64("t"), p.f64("dt"), p.usize("paths"), seed);
    let spec = MixedNormSpec::new(d, p.f64("p"), p.f64("q"));
    let center = vec![std::f64::consts::PI; d];
    let region = Region::cube(&center, 1.0, p.usize("per_axis"))?;
    let drifts = mollified_levels(d, p.f64("gamma"), &p.levels("levels"))?;
    let f = ScalarFn::bump(&center, 0.5, 1.0);
    let rep = krylov_check(&drifts, &[("bump".into(), f)], &spec, &cfg, &region, p.usize("n"))?;
    Ok(Outcome::from_reports(vec![rep]))
}

fn gradient_cfg(p: &Params, seed: u64) -> FlowConfig {
    let t = p.f64("t");
    let dt = p.f64("dt");
    let cps: Vec<f64> = (1..=4).map(|k| ((k as f64 * t / 4.0) / dt).round() * dt).collect();
    FlowConfig::new(0.0, t, dt, p.usize("paths"), seed).with_checkpoints(&cps)
}

fn run_gradient(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let d = p.usize("d");
    let cfg = gradient_cfg(p, seed);
    let center = vec![std::f64::consts::PI; d];
    let region = Region::cube(&center, 1.0, p.usize("per_axis"))?;
    let drifts = mollified_levels(d, p.f64("gamma"), &p.levels("levels"))?;
    let mut sing = gradient_moment(&drifts, p.f64("r"), p.f64("p"), &cfg, &region)?;
    sing.id = "gradient_moment:mollified_singular".into();

    let mut zero = gradient_moment(&[(0.0, DriftField::zero(d))], p.f64("r"), p.f64("p"), &cfg, &region)?;
    zero.id = "gradient_moment:zero".into();
    let zmax = zero.get("max_quantity").unwrap_or(f64::NAN);
    zero.check("vanishes for b = 0", Verdict::from_bool(zmax == 0.0), format!("{zmax}"));

    let mut out = vec![sing, zero];
    {
        let center = [std::f64::consts::PI; 3];
        let lin = DriftField::linear(&LINEAR_A, 3);
        let mut rep = gradient_moment(&[(0.0, lin)], p.f64("r"), p.f64("p"), &cfg, &Region::cube(&center, 0.5, 1)?)?;
        rep.id = "gradient_moment:linear".into();
        let t = p.f64("t");
        let e = expm(&LINEAR_A, 3, t);
        let exact = e
            .iter()
            .enumerate()
            .map(|(i, v)| (v - if i % 4 == 0 { 1.0 } else { 0.0 }).powi(2))
            .sum::<f64>()
            .sqrt();
        // unit-volume region with a single point
        let got = rep.get("max_quantity").unwrap_or(f64::NAN);
        rep.value("exact_final", exact);
        rep.check_le("matches |exp(At) - I|", (got - exact).abs() / exact, 0.01);
        if let Some(fit) = rep.get_fit("growth:m=0") {
            let theta = fit.slope;
            rep.value("theta", theta);
        }
        out.push(rep);
    }
    Ok(Outcome::from_reports(out))
}

fn run_malliavin(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let d = p.usize("d");
    let t = p.f64("t");
    let cfg = FlowConfig::new(0.0, t, p.f64("dt"), p.usize("paths"), seed);
    let center = vec![std::f64::consts::PI; d];
    let region = Region::cube(&center, 1.0, p.usize("per_axis"))?;
    let drifts = mollified_levels(d, p.f64("gamma"), &p.levels("levels"))?;
    let mut rep = malliavin_stats(&drifts, p.f64("beta"), &region, p.f64("h"), &cfg)?;
    rep.id = "malliavin_stats:mollified_singular".into();
    for name in ["A1", "A2", "A3"] {
        let s = rep.get(&format!("{name}_spread")).unwrap_or(f64::NAN);
        rep.check_le(format!("{name} spread across levels"), s, 2.0);
    }

    let mut zero = malliavin_stats(&[(0.0, DriftField::zero(d))], p.f64("beta"), &region, p.f64("h"), &cfg)?;
    zero.id = "malliavin_stats:zero".into();
    let a2 = zero.rows.iter().find(|r| r.quantity == "A2").map(|r| r.value).unwrap_or(f64::NAN);
    let a3 = zero.rows.iter().find(|r| r.quantity == "A3").map(|r| r.value).unwrap_or(f64::NAN);
    let exact = d as f64 * t * region.volume();
    zero.value("A2_exact", exact);
    zero.check_le("A2 equals d t |O|", (a2 - exact).abs() / exact, 1e-6);
    zero.check("A3 vanishes", Verdict::from_bool(a3 == 0.0), format!("{a3}"));
    Ok(Outcome::from_reports(vec![rep, zero]))
}

fn run_cauchy(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let d = p.usize("d");
    let cfg = FlowConfig::new(0.0, p.f64("t"), p.f64("dt"), p.usize("paths"), seed);
    let center = vec![std::f64::consts::PI; d];
    let region = Region::cube(&center, 1.0, p.usize("per_axis"))?;
    let b = DriftField::singular(d, p.f64("gamma"))?;
    let rep = cauchy_convergence(&b, &p.levels("levels"), &region, &cfg)?;
    let first = p.levels("levels")[0];
    let mut same = cauchy_convergence(&b, &[first, first], &region, &cfg)?;
    same.id = "cauchy_convergence:identical_levels".into();
    let dist = same.rows.first().map(|r| r.value).unwrap_or(f64::NAN);
    same.check("identical levels give distance 0", Verdict::from_bool(dist == 0.0), format!("{dist}"));
    Ok(Outcome::from_reports(vec![rep, same]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_oracle_reduces_to_window_for_constants() {
        let modes = [(2.0, [0.0; 4], 0.0)];
        assert!((heat_oracle(&modes, &[1.0, 2.0], 0.01, 50) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn heat_oracle_matches_direct_sum() {
        let modes = krylov_test_function(2);
        let x = [0.3, 1.7];
        let (dt, steps) = (0.01, 40);
        let direct: f64 = (0..steps)
            .map(|j| {
                let s = j as f64 * dt;
                modes
                    .iter()
                    .map(|(a, k, ph)| {
                        let k2: f64 = k.iter().map(|v| v * v).sum();
                        a * (k[0] * x[0] + k[1] * x[1] + ph).cos() * (-0.5 * k2 * s).exp()
                    })
                    .sum::<f64>()
                    * dt
            })
            .sum();
        assert!((heat_oracle(&modes, &x, dt, steps) - direct).abs() < 1e-13);
    }
}
