//! Krylov-type bounds `sup_x E ∫ f(X_t) dt <= C ‖f‖_{L^q_t L^p_x}`.

use crate::error::{Error, Result};
use crate::flow::euler::{path_integrals, steps_between};
use crate::flow::FlowConfig;
use crate::norms::{mixed_norm, DriftField, MixedNormSpec, ScalarFn};
use crate::report::{mean_se, ols, EstimateReport, Verdict};

use super::{spread, Region};

/// Scale factors applied to each test function; powers of two keep the
/// path-by-path functional exactly linear.
pub const KRYLOV_SCALES: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

/// Estimate `C` for each drift in `drifts` (labelled by an axis value, e.g. the
/// mollification level) and each base function in `fs`.
///
/// The left side is the maximum over the `points` region of the Monte Carlo
/// mean of `∫_s^t f(X_{s,r}^x) dr`; the right side uses `n^d` samples of `f`.
pub fn krylov_check(
    drifts: &[(f64, DriftField)],
    fs: &[(String, ScalarFn)],
    spec: &MixedNormSpec,
    cfg: &FlowConfig,
    points: &Region,
    n: usize,
) -> Result<EstimateReport> {
    spec.validate()?;
    let d = spec.dim;
    if spec.scaling() >= 2.0 {
        return Err(Error::Domain(format!(
            "Krylov estimate needs d/p + 2/q < 2, got {}",
            spec.scaling()
        )));
    }
    if points.dim != d {
        return Err(Error::Domain("region dimension differs from the norm dimension".into()));
    }
    let steps = steps_between(cfg.s, cfg.t, cfg.dt)?;
    let mut rep = EstimateReport::new("krylov_check", cfg.seed);
    let xs = points.points();
    let mut constants = Vec::new();
    let mut linear = true;
    for (level, b) in drifts {
        let src = cfg.source(d);
        let first = src.step_index(cfg.s)?;
        let mut c_level: f64 = 0.0;
        for (name, f) in fs {
            let mut lhs = Vec::new();
            let mut rhs = Vec::new();
            for &lam in &KRYLOV_SCALES {
                let g = f.scaled(lam);
                let mut best = (f64::NEG_INFINITY, 0.0);
                for x in xs.chunks(d) {
                    let v = path_integrals(b, &src, x, cfg.s, first, steps, cfg.paths, |y| g.eval(y))?;
                    let (m, se) = mean_se(&v);
                    if m > best.0 {
                        best = (m, se);
                    }
                }
                let norm = mixed_norm(&g.sample(d, n), spec, (cfg.s, cfg.t))?;
                rep.row("scale", lam, format!("lhs:{name}:m={level}"), best.0, best.1);
                lhs.push(best.0);
                rhs.push(norm);
            }
            let fit = ols(format!("krylov:{name}:m={level}"), &rhs, &lhs);
            linear &= fit.residual <= 1e-12 * lhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let c = if rhs[0] > 0.0 { lhs[0] / rhs[0] } else { 0.0 };
            rep.row("m", *level, format!("constant:{name}"), c, 0.0);
            c_level = c_level.max(c);
            rep.fit(fit);
        }
        constants.push(c_level);
    }
    rep.value("max_constant", constants.iter().cloned().fold(0.0, f64::max));
    rep.check("linear in ‖f‖", Verdict::from_bool(linear), "zero regression residual across scales");
    if constants.len() > 1 {
        let s = spread(&constants);
        rep.value("constant_spread", s);
        rep.check_le("constant spread across levels", s, 2.0);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_function_gives_window_length() {
        let spec = MixedNormSpec::new(2, 4.0, 4.0);
        let cfg = FlowConfig::new(0.0, 0.5, 0.01, 16, 1);
        let rep = krylov_check(
            &[(0.0, DriftField::zero(2))],
            &[("one".into(), ScalarFn::Constant(1.0))],
            &spec,
            &cfg,
            &Region::torus(2, 2),
            8,
        )
        .unwrap();
        let lhs = rep.rows.iter().find(|r| r.quantity.starts_with("lhs")).unwrap().value;
        assert!((lhs - 0.5).abs() < 1e-12);
        assert!(rep.passed());
    }

    #[test]
    fn bump_matches_heat_kernel_quadrature() {
        // E ∫_0^T f(x + W_t) dt with f a Gaussian bump of width w centred at x:
        // E f(x + W_t) = amp (w² / (w² + t))^{d/2} (periodic images negligible)
        let w: f64 = 0.4;
        let t_end = 0.5;
        let c = [3.0, 3.0];
        let f = ScalarFn::bump(&c, w, 1.0);
        let spec = MixedNormSpec::new(2, 4.0, 4.0);
        let cfg = FlowConfig::new(0.0, t_end, 0.005, 4000, 9);
        let region = Region::new(&[2.9, 2.9], &[3.1, 3.1], 1).unwrap();
        let rep = krylov_check(&[(0.0, DriftField::zero(2))], &[("bump".into(), f)], &spec, &cfg, &region, 16).unwrap();
        let row = rep.rows.iter().find(|r| r.quantity.starts_with("lhs")).unwrap();
        let exact = crate::quadrature::integrate(|t| w * w / (w * w + t), 0.0, t_end, 4, 12);
        // left Riemann sum bias is O(dt)
        assert!((row.value - exact).abs() < 3.0 * row.std_error + 0.01, "{} vs {exact}", row.value);
    }

    #[test]
    fn supercritical_spec_is_refused() {
        let spec = MixedNormSpec::new(3, 1.5, 2.0);
        let cfg = FlowConfig::new(0.0, 0.5, 0.01, 4, 1);
        let r = krylov_check(&[], &[], &spec, &cfg, &Region::torus(3, 1), 8);
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
