//! Moments of the flow gradient, `‖∇X_{s,t} - I‖_{L^{pr}_x L^r_ω}`.

use crate::error::{Error, Result};
use crate::flow::{simulate_flow, variational_flow, FlowConfig};
use crate::norms::DriftField;
use crate::report::{loglog, EstimateReport};

use super::{spread, Region};

/// `(∫_O (E|∇X_{s,t}^x - I|^r)^p dx)^{1/(pr)}` at every checkpoint of `cfg`
/// (Frobenius norm, midpoint rule over `region`), for each drift level.
///
/// Per level the quantity is fitted as `C (t-s)^θ` and `θ > 0` is required;
/// across levels the value at the last checkpoint must vary by at most 2×.
pub fn gradient_moment(
    drifts: &[(f64, DriftField)],
    r: f64,
    p: f64,
    cfg: &FlowConfig,
    region: &Region,
) -> Result<EstimateReport> {
    if !(r >= 2.0) || !(p >= 1.0) {
        return Err(Error::Domain(format!("need r >= 2 and p >= 1, got r={r} p={p}")));
    }
    let xs = region.points();
    let npts = region.len();
    let w = region.weight();
    let mut rep = EstimateReport::new("gradient_moment", cfg.seed);
    let mut finals = Vec::new();
    for (level, b) in drifts {
        b.require_gradient()?;
        let ens = simulate_flow(b, cfg, &xs)?;
        let jac = variational_flow(&ens)?;
        let d = ens.dim();
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (c, &t) in ens.checkpoints().iter().enumerate() {
            let mut integral = 0.0;
            for pt in 0..npts {
                let mut e = 0.0;
                for m in 0..ens.paths() {
                    let mat = jac.matrix(0, c, pt, m);
                    let mut f2 = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            let v = mat[i * d + j] - if i == j { 1.0 } else { 0.0 };
                            f2 += v * v;
                        }
                    }
                    e += f2.powf(0.5 * r);
                }
                integral += w * (e / ens.paths() as f64).powf(p);
            }
            let q = integral.powf(1.0 / (p * r));
            rep.row("t", t - cfg.s, format!("quantity:m={level}"), q, 0.0);
            if t > cfg.s {
                times.push(t - cfg.s);
                values.push(q);
            }
        }
        let last = values.last().copied().unwrap_or(0.0);
        finals.push(last);
        if values.iter().all(|&v| v == 0.0) {
            rep.note(format!("m = {level}: quantity vanishes identically"));
        } else if values.len() >= 2 && values.iter().all(|&v| v > 0.0) {
            let fit = loglog(format!("growth:m={level}"), &times, &values);
            let theta = fit.slope;
            rep.fit(fit);
            rep.check_ge(format!("growth exponent m={level}"), theta, f64::MIN_POSITIVE);
        }
    }
    rep.value("max_quantity", finals.iter().cloned().fold(0.0, f64::max));
    if finals.len() > 1 {
        let s = spread(&finals);
        rep.value("spread", s);
        rep.check_le("spread across levels", s, 2.0);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishes_without_drift() {
        let cfg = FlowConfig::new(0.0, 0.2, 0.01, 8, 1).with_checkpoints(&[0.1, 0.2]);
        let rep = gradient_moment(&[(0.0, DriftField::zero(2))], 2.0, 2.0, &cfg, &Region::torus(2, 2)).unwrap();
        assert_eq!(rep.get("max_quantity"), Some(0.0));
    }

    #[test]
    fn linear_drift_grows_linearly() {
        // ∇X_t = e^{At} deterministically; |e^{At} - I| ~ |A| t for small t
        let a = [0.0, 1.0, -1.0, 0.0];
        let b = DriftField::linear(&a, 2);
        let cps: Vec<f64> = (1..=5).map(|k| 0.01 * 2f64.powi(k)).collect();
        let cfg = FlowConfig::new(0.0, 0.32, 1e-4, 2, 1).with_checkpoints(&cps);
        let rep = gradient_moment(&[(0.0, b)], 2.0, 2.0, &cfg, &Region::torus(2, 1)).unwrap();
        let theta = rep.fits[0].slope;
        assert!((theta - 1.0).abs() < 0.02, "{theta}");
        // |e^{At} - I|_F = 2 sin(t/2) · √2 for a rotation generator
        let row = rep.rows.last().unwrap();
        let t = row.axis_value;
        let exact = 2.0 * (t / 2.0).sin() * 2f64.sqrt() * (4.0 * std::f64::consts::PI.powi(2)).powf(0.25);
        assert!((row.value / exact - 1.0).abs() < 1e-3, "{} vs {exact}", row.value);
    }
}
