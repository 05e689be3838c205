//! Monte Carlo versus PDE checks of the conditional-expectation identities.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::euler::{integrate_path, path_integrals, steps_between};
use crate::grid::{PeriodicField, SpectralInterpolant};
use crate::norms::{mixed_norm, DriftField, MixedNormSpec, ScalarFn};
use crate::report::{loglog, mean_se, EstimateReport, Verdict};
use crate::rng::BrownianSource;

use super::solver::{solve_kolmogorov, Forcing, KolmogorovProblem};

/// Largest supported depth of the iterated integral.
pub const MAX_ITERATION_DEPTH: usize = 3;

/// Grid, step and Monte Carlo size of a duality check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityConfig {
    pub n: usize,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    /// Multiple of `dt` added to `3·SE` in the agreement tolerance.
    pub dt_factor: f64,
}

impl DualityConfig {
    pub fn new(n: usize, dt: f64, paths: usize, seed: u64) -> Self {
        Self {
            n,
            dt,
            paths,
            seed,
            dt_factor: 5.0,
        }
    }

    pub fn with_dt_factor(mut self, c: f64) -> Self {
        self.dt_factor = c;
        self
    }
}

/// Per-path Monte Carlo samples of a path functional, in path order.
fn path_samples<F>(b: &DriftField, src: &BrownianSource, x: &[f64], steps: usize, paths: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&DriftField, &BrownianSource, u64, &mut [f64], usize) -> Result<f64> + Sync,
{
    (0..paths)
        .into_par_iter()
        .map(|m| {
            let mut y = x.to_vec();
            f(b, src, m as u64, &mut y, steps)
        })
        .collect()
}

fn evaluate(field: &PeriodicField, ti: usize, x: &[f64]) -> f64 {
    let interp = SpectralInterpolant::from_snapshot(field, ti, 1e-14);
    let mut out = [0.0];
    interp.eval(x, &mut out);
    out[0]
}

/// `E ∫_{S0}^{S1} g(X_s^x) ds` by Monte Carlo (left Riemann sum along Euler paths)
/// against `u(S0, x)` of the backward equation with forcing `g`.
pub fn feynman_kac_check(
    b: &DriftField,
    g: &ScalarFn,
    s0: f64,
    s1: f64,
    xs: &[Vec<f64>],
    cfg: &DualityConfig,
) -> Result<EstimateReport> {
    let d = b.dim();
    let steps = steps_between(s0, s1, cfg.dt)?;
    let pde = KolmogorovProblem::backward(b.clone(), Forcing::Scalar(g.clone()), s0, s1, cfg.n, cfg.dt)
        .with_record_every(steps.max(1));
    let sol = solve_kolmogorov(&pde)?;
    let src = BrownianSource::new(cfg.seed, d, cfg.dt, s0);
    let mut rep = EstimateReport::new("feynman_kac_check", cfg.seed);
    let mut worst: f64 = 0.0;
    let mut max_se: f64 = 0.0;
    let mut all_ok = true;
    for (i, x) in xs.iter().enumerate() {
        let samples = path_integrals(b, &src, x, s0, 0, steps, cfg.paths, |xk| g.eval(xk))?;
        let (mc, se) = mean_se(&samples);
        let u = evaluate(&sol.solution, 0, x);
        let diff = (mc - u).abs();
        let tol = 3.0 * se + cfg.dt_factor * cfg.dt;
        all_ok &= diff <= tol;
        rep.row("point", i as f64, "mc", mc, se);
        rep.row("point", i as f64, "pde", u, 0.0);
        rep.row("point", i as f64, "abs_diff", diff, se);
        worst = worst.max(diff);
        max_se = max_se.max(se);
    }
    rep.value("max_abs_diff", worst);
    rep.value("max_se", max_se);
    rep.check(
        "|MC - PDE| <= 3 SE + c dt",
        Verdict::from_bool(all_ok),
        format!("max diff {worst:.3e}, max SE {max_se:.3e}, dt {}", cfg.dt),
    );
    Ok(rep)
}

/// One factor of the iterated integral: `∂_axis f` evaluated along the path.
#[derive(Debug, Clone)]
pub struct IteratedFactor {
    pub f: ScalarFn,
    pub axis: usize,
}

/// `u_1(S0, ·)` of the nested backward recursion `g_k = (∂_{α_k} f_k) u_{k+1}`,
/// `u_{n+1} = 1`.
pub fn nested_solution(
    b: &DriftField,
    factors: &[IteratedFactor],
    s0: f64,
    s1: f64,
    n: usize,
    dt: f64,
) -> Result<PeriodicField> {
    if factors.is_empty() || factors.len() > MAX_ITERATION_DEPTH {
        return Err(Error::Domain(format!(
            "iterated integrals need 1..={MAX_ITERATION_DEPTH} factors, got {}",
            factors.len()
        )));
    }
    let d = b.dim();
    let mut next: Option<PeriodicField> = None;
    for fac in factors.iter().rev() {
        let forcing = match &next {
            None => Forcing::Partial(fac.f.clone(), fac.axis),
            Some(u) => {
                let df = fac.f.sample_partial(d, n, fac.axis);
                let df = df.slice(0, 0);
                let mut g = u.clone();
                for ti in 0..u.times().len() {
                    for (v, w) in g.slice_mut(ti, 0).iter_mut().zip(df) {
                        *v *= w;
                    }
                }
                Forcing::Field(g)
            }
        };
        let sol = solve_kolmogorov(&KolmogorovProblem::backward(b.clone(), forcing, s0, s1, n, dt))?;
        next = Some(sol.solution);
    }
    let u = next.expect("at least one factor");
    Ok(u.at(0))
}

/// Simplex integral `E ∫_{S0<t_1<…<t_n<S1} Π ∂_{α_k} f_k(X_{t_k}) dt` by Monte Carlo
/// against `u_1(S0, x)` of the nested PDE recursion.
///
/// `windows` lists window lengths for the growth study: the `L^2_x` norm of
/// `u_1(S0, ·)` is fitted as a power of the window length.
pub fn iterated_integral_duality(
    b: &DriftField,
    factors: &[IteratedFactor],
    s0: f64,
    s1: f64,
    xs: &[Vec<f64>],
    cfg: &DualityConfig,
    windows: &[f64],
) -> Result<EstimateReport> {
    let d = b.dim();
    let depth = factors.len();
    let u1 = nested_solution(b, factors, s0, s1, cfg.n, cfg.dt)?;
    let steps = steps_between(s0, s1, cfg.dt)?;
    let src = BrownianSource::new(cfg.seed, d, cfg.dt, s0);
    let mut rep = EstimateReport::new("iterated_integral_duality", cfg.seed);
    rep.value("depth", depth as f64);
    let mut worst: f64 = 0.0;
    let mut all_ok = true;
    for (i, x) in xs.iter().enumerate() {
        let samples = path_samples(b, &src, x, steps, cfg.paths, |b, src, m, y, steps| {
            // acc[k] = integral over the k-simplex of the first k factors
            let mut acc = [1.0, 0.0, 0.0, 0.0];
            integrate_path(b, src, m, y, s0, 0, steps, |_, _, xk, _| {
                for k in (1..=depth).rev() {
                    let fac = &factors[k - 1];
                    acc[k] += cfg.dt * fac.f.partial(xk, fac.axis) * acc[k - 1];
                }
            })?;
            Ok(acc[depth])
        })?;
        let (mc, se) = mean_se(&samples);
        let u = evaluate(&u1, 0, x);
        let diff = (mc - u).abs();
        all_ok &= diff <= 3.0 * se + cfg.dt_factor * cfg.dt;
        rep.row("point", i as f64, "mc", mc, se);
        rep.row("point", i as f64, "pde", u, 0.0);
        rep.row("point", i as f64, "abs_diff", diff, se);
        worst = worst.max(diff);
    }
    rep.value("max_abs_diff", worst);
    rep.check(
        "|MC - PDE| <= 3 SE + c dt",
        Verdict::from_bool(all_ok),
        format!("max diff {worst:.3e}, dt {}", cfg.dt),
    );
    let spec = MixedNormSpec::new(d, 2.0, f64::INFINITY);
    rep.value("pde_l2_norm", mixed_norm(&u1, &spec, (0.0, 1.0))?);

    if windows.len() >= 2 {
        let mut lens = Vec::new();
        let mut norms = Vec::new();
        for &w in windows {
            let u = nested_solution(b, factors, s1 - w, s1, cfg.n, cfg.dt)?;
            let nrm = mixed_norm(&u, &spec, (0.0, 1.0))?;
            rep.row("window", w, "pde_l2_norm", nrm, 0.0);
            lens.push(w);
            norms.push(nrm);
        }
        let fit = loglog("window_growth", &lens, &norms);
        let gamma = fit.slope;
        rep.fit(fit);
        rep.check_ge("growth exponent", gamma, f64::MIN_POSITIVE);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand_is_exact() {
        let g = ScalarFn::Constant(1.0);
        let cfg = DualityConfig::new(8, 0.01, 64, 3);
        let rep = feynman_kac_check(&DriftField::zero(2), &g, 0.0, 0.5, &[vec![1.0, 2.0]], &cfg).unwrap();
        assert!(rep.get("max_abs_diff").unwrap() < 1e-12);
        assert!(rep.passed());
    }

    #[test]
    fn heat_mode_within_tolerance() {
        // E ∫_0^T cos(x1 + W1_s) ds = cos(x1) · 2(1 - e^{-T/2})
        let g = ScalarFn::cosine(&[1.0, 0.0], 1.0);
        let cfg = DualityConfig::new(8, 0.01, 4000, 11);
        let x = vec![0.4, 2.0];
        let rep = feynman_kac_check(&DriftField::zero(2), &g, 0.0, 1.0, &[x.clone()], &cfg).unwrap();
        assert!(rep.passed(), "{}", rep.summary());
        let pde = rep.rows.iter().find(|r| r.quantity == "pde").unwrap().value;
        let exact = 0.4f64.cos() * 2.0 * (1.0 - (-0.5f64).exp());
        assert!((pde - exact).abs() < 1e-10);
    }

    #[test]
    fn constant_factor_gives_zero() {
        let facs = [
            IteratedFactor { f: ScalarFn::cosine(&[1.0, 0.0], 1.0), axis: 0 },
            IteratedFactor { f: ScalarFn::Constant(2.0), axis: 1 },
        ];
        let cfg = DualityConfig::new(8, 0.01, 32, 1);
        let rep = iterated_integral_duality(&DriftField::zero(2), &facs, 0.0, 0.5, &[vec![1.0, 1.0]], &cfg, &[]).unwrap();
        assert_eq!(rep.get("max_abs_diff"), Some(0.0));
    }

    #[test]
    fn single_factor_matches_mode_oracle() {
        // ∂_1 sin(x1) = cos(x1): u_1(0, x) = cos(x1) · 2(1 - e^{-T/2})
        let facs = [IteratedFactor { f: ScalarFn::sine(&[1.0, 0.0], 1.0), axis: 0 }];
        let u = nested_solution(&DriftField::zero(2), &facs, 0.0, 1.0, 8, 0.01).unwrap();
        let v = evaluate(&u, 0, &[0.3, 0.0]);
        assert!((v - 0.3f64.cos() * 2.0 * (1.0 - (-0.5f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn two_factor_recursion_matches_mode_oracle() {
        // f = cos x1, ∂_1 f = -sin x1: u_2 = -c(t) sin x1 with c = 2(1 - e^{-(T-t)/2}),
        // g_1 = c sin² x1 and u_1(0, x) = A + B cos 2x1.
        let f = ScalarFn::cosine(&[1.0, 0.0], 1.0);
        let facs = [IteratedFactor { f: f.clone(), axis: 0 }, IteratedFactor { f, axis: 0 }];
        let u = nested_solution(&DriftField::zero(2), &facs, 0.0, 1.0, 8, 1e-3).unwrap();
        let e = |a: f64| (-a).exp();
        let a = 1.0 - 2.0 * (1.0 - e(0.5));
        let b = -((1.0 - e(2.0)) / 2.0 - e(0.5) * (1.0 - e(1.5)) / 1.5);
        for x1 in [0.0, 0.4, 1.3] {
            let v = evaluate(&u, 0, &[x1, 0.2]);
            assert!((v - (a + b * (2.0 * x1).cos())).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn depth_is_limited() {
        let f = IteratedFactor { f: ScalarFn::Constant(1.0), axis: 0 };
        let facs = vec![f; 4];
        assert!(matches!(
            nested_solution(&DriftField::zero(1), &facs, 0.0, 1.0, 8, 0.1),
            Err(Error::Domain(_))
        ));
    }
}
