//! Compactness statistics of the Malliavin-Sobolev type and the Cauchy
//! mechanism of the mollified approximating sequence.

use crate::error::{Error, Result};
use crate::flow::{default_sigmas, malliavin_derivative, simulate_flow, FlowConfig, FlowEnsemble};
use crate::norms::{mollify, DriftField};
use crate::report::{EstimateReport, Verdict};

use super::{spread, Region};

/// Trapezoid weights on a sorted, possibly non-uniform grid.
fn trapezoid(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = 0.5 * (nodes[i] - nodes[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

struct Stats {
    a1: f64,
    a1_half: f64,
    a2: f64,
    a3: f64,
}

fn level_stats(b: &DriftField, beta: f64, region: &Region, h: f64, cfg: &FlowConfig) -> Result<Stats> {
    let d = b.dim();
    let base = region.points();
    let k = region.len();
    // base points, then shifts by h e_j, then by h/2 e_j
    let mut pts = base.clone();
    for step in [h, 0.5 * h] {
        for j in 0..d {
            for x in base.chunks(d) {
                let mut y = x.to_vec();
                y[j] += step;
                pts.extend_from_slice(&y);
            }
        }
    }
    let cfg = cfg.clone().with_checkpoints(&[cfg.t]);
    let ens = simulate_flow(b, &cfg, &pts)?;
    let w = region.weight();
    let paths = ens.paths();
    let a1_with = |ens: &FlowEnsemble, block: usize, step: f64| -> f64 {
        let mut acc = 0.0;
        for p in 0..k {
            for m in 0..paths {
                let x = ens.state(0, p, m);
                let mut v: f64 = x.iter().map(|a| a * a).sum();
                for j in 0..d {
                    let y = ens.state(0, k * (1 + block * d + j) + p, m);
                    v += x.iter().zip(y).map(|(a, b)| ((b - a) / step).powi(2)).sum::<f64>();
                }
                acc += v;
            }
        }
        w * acc / paths as f64
    };
    let a1 = a1_with(&ens, 0, h);
    let a1_half = a1_with(&ens, 1, 0.5 * h);

    let sigmas = default_sigmas(cfg.s, cfg.t, cfg.dt);
    let base_ens = simulate_flow(b, &cfg, &base)?;
    let mal = malliavin_derivative(&base_ens, &sigmas)?;
    let ws = trapezoid(&sigmas);
    let ns = sigmas.len();
    let mut a2 = 0.0;
    let mut a3 = 0.0;
    for p in 0..k {
        for m in 0..paths {
            for i in 0..ns {
                let di = mal.matrix(i, 0, p, m);
                a2 += ws[i] * di.iter().map(|v| v * v).sum::<f64>();
                for j in i + 1..ns {
                    let dj = mal.matrix(j, 0, p, m);
                    let num: f64 = di.iter().zip(dj).map(|(a, b)| (a - b) * (a - b)).sum();
                    let den = (sigmas[j] - sigmas[i]).abs().powf(1.0 + 2.0 * beta);
                    a3 += 2.0 * ws[i] * ws[j] * num / den;
                }
            }
        }
    }
    Ok(Stats {
        a1,
        a1_half,
        a2: w * a2 / paths as f64,
        a3: w * a3 / paths as f64,
    })
}

/// The three compactness statistics at time `cfg.t` for each drift level:
/// `A1 = E‖X‖²_{H¹(O)}` by common-noise finite differences at spacing `h`
/// (with an `h/2` consistency value), `A2 = E∫_O∫|D_σX_t|² dσ dx` and
/// `A3 = E∫_O∫∫|D_σX_t - D_σ'X_t|²/|σ-σ'|^{1+2β} dσ dσ' dx` on the σ-grid.
///
/// Each statistic passes if its maximum over levels is at most twice the value
/// at the last (finest) level.
pub fn malliavin_stats(
    drifts: &[(f64, DriftField)],
    beta: f64,
    region: &Region,
    h: f64,
    cfg: &FlowConfig,
) -> Result<EstimateReport> {
    if !(beta > 0.0) || !(h > 0.0) {
        return Err(Error::Domain("need β > 0 and h > 0".into()));
    }
    let mut rep = EstimateReport::new("malliavin_stats", cfg.seed);
    let mut cols: [Vec<f64>; 3] = Default::default();
    for (level, b) in drifts {
        let s = level_stats(b, beta, region, h, cfg)?;
        rep.row("m", *level, "A1", s.a1, 0.0);
        rep.row("m", *level, "A1_half_h", s.a1_half, 0.0);
        rep.row("m", *level, "A2", s.a2, 0.0);
        rep.row("m", *level, "A3", s.a3, 0.0);
        if s.a1 > 0.0 {
            rep.note(format!("m = {level}: A1 h-halving change {:.2e}", (s.a1_half / s.a1 - 1.0).abs()));
        }
        cols[0].push(s.a1);
        cols[1].push(s.a2);
        cols[2].push(s.a3);
    }
    let pairs = {
        let n = default_sigmas(cfg.s, cfg.t, cfg.dt).len();
        n * (n - 1) / 2
    };
    for (name, col) in ["A1", "A2", "A3"].iter().zip(&cols) {
        let Some(&finest) = col.last() else { continue };
        let max = col.iter().cloned().fold(0.0, f64::max);
        rep.value(format!("{name}_spread"), spread(col));
        if *name == "A3" && pairs < 4 {
            rep.check("A3 bounded", Verdict::Inconclusive, format!("{pairs} σ-pairs, need 4"));
            continue;
        }
        rep.check(
            format!("{name} bounded"),
            Verdict::from_bool(max <= 2.0 * finest || max == 0.0),
            format!("max {max:.4e}, finest {finest:.4e}"),
        );
    }
    Ok(rep)
}

/// `E∫_O |X^x(k) - X^x(k')|² dx` at time `cfg.t` for consecutive mollification
/// levels of `b` on common noise; passes if the distances decrease with at
/// most one inversion.
pub fn cauchy_convergence(b: &DriftField, levels: &[u32], region: &Region, cfg: &FlowConfig) -> Result<EstimateReport> {
    if levels.len() < 2 {
        return Err(Error::Domain("need at least two levels".into()));
    }
    if region.dim != b.dim() {
        return Err(Error::Domain("region dimension differs from the drift dimension".into()));
    }
    let cfg = cfg.clone().with_checkpoints(&[cfg.t]);
    let xs = region.points();
    let k = region.len();
    let w = region.weight();
    let mut rep = EstimateReport::new("cauchy_convergence", cfg.seed);
    let mut prev: Option<FlowEnsemble> = None;
    let mut dists = Vec::new();
    for (i, &m) in levels.iter().enumerate() {
        let ens = simulate_flow(&mollify(b, m)?, &cfg, &xs)?;
        if let Some(p) = &prev {
            let mut acc = 0.0;
            for pt in 0..k {
                for path in 0..ens.paths() {
                    acc += p
                        .state(0, pt, path)
                        .iter()
                        .zip(ens.state(0, pt, path))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>();
                }
            }
            let dist = w * acc / ens.paths() as f64;
            rep.row("k", levels[i - 1] as f64, "distance_to_next", dist, 0.0);
            dists.push(dist);
        }
        prev = Some(ens);
    }
    let inversions = dists.windows(2).filter(|p| p[1] > p[0]).count();
    rep.value("inversions", inversions as f64);
    rep.check(
        "consecutive distances decrease",
        Verdict::from_bool(inversions <= 1),
        format!("{inversions} inversion(s) over {} distances", dists.len()),
    );
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_drift_statistics() {
        let region = Region::new(&[1.0, 1.0], &[2.0, 2.0], 2).unwrap();
        let cfg = FlowConfig::new(0.0, 0.7, 0.01, 16, 4);
        let rep = malliavin_stats(&[(0.0, DriftField::zero(2))], 0.25, &region, 0.05, &cfg).unwrap();
        let get = |q: &str| rep.rows.iter().find(|r| r.quantity == q).unwrap().value;
        // |D_σX|² = d on σ <= t
        assert!((get("A2") - 2.0 * 0.7 * 1.0).abs() < 1e-6);
        assert_eq!(get("A3"), 0.0);
        assert!(rep.passed());
    }

    #[test]
    fn identical_levels_have_zero_distance() {
        let region = Region::new(&[1.0, 1.0], &[2.0, 2.0], 2).unwrap();
        let cfg = FlowConfig::new(0.0, 0.2, 0.01, 8, 4);
        let b = DriftField::shear(2, 1.0);
        let rep = cauchy_convergence(&b, &[8, 8], &region, &cfg).unwrap();
        assert_eq!(rep.rows[0].value, 0.0);
    }
}
