//! Hölder moments `E|X - X'|^r` of the flow along time, start-time and space increments.

use crate::error::{Error, Result};
use crate::flow::{simulate_flow, FlowConfig};
use crate::norms::DriftField;
use crate::report::{loglog, mean_se, EstimateReport, Verdict};

/// Which argument of `X_{s,t}^x` is perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairAxis {
    /// `X_{s,t-δ}^x` vs `X_{s,t}^x`.
    Time,
    /// `X_{s,t}^x` vs `X_{s+δ,t}^x` on common noise.
    Start,
    /// `X_{s,t}^x` vs `X_{s,t}^{x+δe_1}`.
    Space,
}

impl PairAxis {
    pub fn label(self) -> &'static str {
        match self {
            PairAxis::Time => "t",
            PairAxis::Start => "s",
            PairAxis::Space => "x",
        }
    }

    /// Smallest admissible slope for exponents `r`, `β` in dimension `d`.
    pub fn threshold(self, r: f64, beta: f64, d: usize) -> f64 {
        match self {
            PairAxis::Time => beta * r,
            PairAxis::Start => beta * (r - d as f64),
            PairAxis::Space => r - d as f64,
        }
    }
}

fn moment(a: &[f64], b: &[f64], r: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().powf(0.5 * r)
}

/// Log-log slope of `E|ΔX|^r` against the increments `scales` along `axis`.
///
/// `xs` holds the initial points (flat). The slope must reach the axis
/// threshold less 10%; fewer than 4 scales make the verdict inconclusive.
pub fn holder_moments(
    b: &DriftField,
    xs: &[f64],
    r: f64,
    beta: f64,
    axis: PairAxis,
    cfg: &FlowConfig,
    scales: &[f64],
) -> Result<EstimateReport> {
    let d = b.dim();
    if !(r > 0.0) || !(beta > 0.0 && beta < 0.5) {
        return Err(Error::Domain(format!("need r > 0 and β ∈ (0, 1/2), got r={r} β={beta}")));
    }
    if scales.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::Domain("increments must be positive".into()));
    }
    let npts = xs.len() / d;
    let paths = cfg.paths;
    let mut rep = EstimateReport::new(format!("holder_moments_{}", axis.label()), cfg.seed);
    let mut moments = Vec::with_capacity(scales.len());
    let mut record = |rep: &mut EstimateReport, h: f64, samples: Vec<f64>| {
        let (m, se) = mean_se(&samples);
        rep.row(axis.label(), h, "moment", m, se);
        moments.push(m);
    };
    match axis {
        PairAxis::Time => {
            let mut cps: Vec<f64> = scales.iter().map(|h| cfg.t - h).collect();
            cps.push(cfg.t);
            if cps.iter().any(|&c| c < cfg.s) {
                return Err(Error::Domain("time increments exceed the window".into()));
            }
            let ens = simulate_flow(b, &cfg.clone().with_checkpoints(&cps), xs)?;
            let end = ens.checkpoint_index(cfg.t)?;
            for &h in scales {
                let c = ens.checkpoint_index(cfg.t - h)?;
                let mut samples = Vec::with_capacity(npts * paths);
                for p in 0..npts {
                    for m in 0..paths {
                        samples.push(moment(ens.state(c, p, m), ens.state(end, p, m), r));
                    }
                }
                record(&mut rep, h, samples);
            }
        }
        PairAxis::Start => {
            let base_cfg = cfg.clone().with_noise_origin(cfg.s).with_checkpoints(&[cfg.t]);
            let base = simulate_flow(b, &base_cfg, xs)?;
            for &h in scales {
                let mut c2 = base_cfg.clone();
                c2.s = cfg.s + h;
                if c2.s > cfg.t {
                    return Err(Error::Domain("start increments exceed the window".into()));
                }
                let late = simulate_flow(b, &c2, xs)?;
                let mut samples = Vec::with_capacity(npts * paths);
                for p in 0..npts {
                    for m in 0..paths {
                        samples.push(moment(base.state(0, p, m), late.state(0, p, m), r));
                    }
                }
                record(&mut rep, h, samples);
            }
        }
        PairAxis::Space => {
            let mut all = xs.to_vec();
            for &h in scales {
                for p in 0..npts {
                    let mut y = xs[p * d..(p + 1) * d].to_vec();
                    y[0] += h;
                    all.extend_from_slice(&y);
                }
            }
            let ens = simulate_flow(b, &cfg.clone().with_checkpoints(&[cfg.t]), &all)?;
            for (j, &h) in scales.iter().enumerate() {
                let mut samples = Vec::with_capacity(npts * paths);
                for p in 0..npts {
                    let q = npts * (j + 1) + p;
                    for m in 0..paths {
                        samples.push(moment(ens.state(0, p, m), ens.state(0, q, m), r));
                    }
                }
                record(&mut rep, h, samples);
            }
        }
    }
    let threshold = axis.threshold(r, beta, d);
    rep.value("r", r);
    rep.value("beta", beta);
    rep.value("threshold", threshold);
    if scales.len() < 4 {
        rep.check("slope", Verdict::Inconclusive, format!("{} scales, need at least 4", scales.len()));
        return Ok(rep);
    }
    let fit = loglog(format!("holder_{}", axis.label()), scales, &moments);
    let slope = fit.slope;
    rep.value("slope", slope);
    rep.value("residual", fit.residual);
    rep.fit(fit);
    rep.check_ge("slope", slope, threshold - 0.1 * threshold);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic(k: usize, top: f64) -> Vec<f64> {
        (0..k).map(|j| top / 2f64.powi(j as i32)).collect()
    }

    #[test]
    fn brownian_fourth_moment() {
        // E|W_h|⁴ = d(d+2) h²
        let cfg = FlowConfig::new(0.0, 0.5, 1.0 / 512.0, 20000, 5);
        let rep = holder_moments(&DriftField::zero(3), &[1.0, 1.0, 1.0], 4.0, 0.45, PairAxis::Time, &cfg, &dyadic(5, 0.25)).unwrap();
        let slope = rep.get("slope").unwrap();
        assert!((slope - 2.0).abs() < 0.05, "{slope}");
        for row in &rep.rows {
            let exact = 15.0 * row.axis_value * row.axis_value;
            assert!((row.value - exact).abs() < 4.0 * row.std_error, "{} vs {exact}", row.value);
        }
        assert!(rep.passed());
    }

    #[test]
    fn space_increments_are_exact_without_drift() {
        let cfg = FlowConfig::new(0.0, 0.25, 1.0 / 64.0, 50, 2);
        let rep = holder_moments(&DriftField::zero(2), &[1.0, 2.0, 3.0, 0.5], 4.0, 0.4, PairAxis::Space, &cfg, &dyadic(5, 0.5)).unwrap();
        assert!((rep.get("slope").unwrap() - 4.0).abs() < 1e-9);
        assert!(rep.get("residual").unwrap() < 1e-9);
    }

    #[test]
    fn start_increments_follow_noise() {
        // X_{s,t} - X_{s+h,t} = W_{s+h} - W_s for b = 0
        let cfg = FlowConfig::new(0.0, 0.5, 1.0 / 256.0, 4000, 3);
        let rep = holder_moments(&DriftField::zero(2), &[1.0, 1.0], 4.0, 0.45, PairAxis::Start, &cfg, &dyadic(4, 0.25)).unwrap();
        assert!((rep.get("slope").unwrap() - 2.0).abs() < 0.1);
    }

    #[test]
    fn few_scales_are_inconclusive() {
        let cfg = FlowConfig::new(0.0, 0.5, 1.0 / 64.0, 10, 3);
        let rep = holder_moments(&DriftField::zero(1), &[1.0], 4.0, 0.45, PairAxis::Time, &cfg, &dyadic(3, 0.25)).unwrap();
        assert_eq!(rep.verdict(), Verdict::Inconclusive);
    }
}
