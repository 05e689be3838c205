//! Norm hierarchy, mollification, truncation remainders and maximal functions.

use critflow::grid::{PeriodicField, SpectralGrid};
use critflow::norms::maximal::ball_average_direct;
use critflow::norms::{
    dyadic_radii, lps_index, maximal_function, mollify, remainder_k, separable, Criticality, DriftField,
    MixedNormSpec, RemainderGrid, Trig,
};
use critflow::report::{EstimateReport, Verdict};

use super::{all, at_least, catalog_drift, dim, drift_list, gamma, grid_size, increasing_positive, levels};
use crate::config::{float, int, list, text, Params};
use crate::registry::{Experiment, Outcome};

pub(crate) fn experiments() -> Vec<Experiment> {
    vec![
        Experiment {
            id: "norms.lps_index",
            module: "norms_and_drifts",
            summary: "criticality index 1 - d/p - 2/q and its sign classification",
            default_seed: 0,
            params: vec![
                int("d", 3, "dimension"),
                list(
                    "pairs",
                    &[3.0, f64::INFINITY, f64::INFINITY, f64::INFINITY, 5.0, 5.0, 4.0, 8.0, 2.0, 4.0],
                    "flat (p, q) pairs; inf allowed",
                ),
            ],
            validate: |p| {
                all(&[dim(p, 2, 4), {
                    let v = p.list("pairs");
                    if v.is_empty() || v.len() % 2 != 0 || v.iter().any(|&e| !(e > 1.0)) {
                        Err("`pairs` must hold (p, q) pairs with exponents > 1".into())
                    } else {
                        Ok(())
                    }
                }])
            },
            run: run_lps,
        },
        Experiment {
            id: "norms.mollify_young",
            module: "norms_and_drifts",
            summary: "mollification keeps constants and does not increase L^p norms",
            default_seed: 0,
            params: vec![
                int("d", 3, "dimension (2 or 3)"),
                int("n", 32, "sampling grid per axis"),
                list("levels", &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0], "mollification scales m"),
                list("exponents", &[1.5, 2.0, 3.0, 4.0, 6.0], "spatial exponents p"),
            ],
            validate: |p| {
                all(&[dim(p, 2, 3), grid_size(p, "n"), levels(p, "levels", 1), {
                    if p.list("exponents").iter().any(|&e| !(e >= 1.0) || e.is_infinite()) {
                        Err("`exponents` must be finite and >= 1".into())
                    } else {
                        Ok(())
                    }
                }])
            },
            run: run_young,
        },
        Experiment {
            id: "norms.remainder",
            module: "norms_and_drifts",
            summary: "mollification remainder K_b(m) in L^d decreases with m for smooth fields",
            default_seed: 0,
            params: vec![
                int("d", 3, "dimension (2 or 3)"),
                int("n", 32, "sampling grid per axis"),
                list("levels", &[2.0, 4.0, 8.0, 16.0], "mollification scales m, increasing"),
                text("drifts", "constant,shear,taylor_green,singular", "catalog ids, comma-separated"),
                float("gamma", 0.5, "singular exponent"),
            ],
            validate: |p| {
                all(&[
                    dim(p, 2, 3),
                    grid_size(p, "n"),
                    levels(p, "levels", 2),
                    increasing_positive(p, "levels", 2),
                    drift_list(p, "drifts"),
                    gamma(p),
                ])
            },
            run: run_remainder,
        },
        Experiment {
            id: "norms.maximal",
            module: "norms_and_drifts",
            summary: "discrete maximal function against a brute-force ball-average scan",
            default_seed: 0,
            params: vec![
                int("n", 16, "grid per axis (3-D)"),
                float("spike", 5.0, "height of the single-node spike"),
                int("probes", 24, "nodes checked by brute force"),
            ],
            validate: |p| all(&[grid_size(p, "n"), super::positive(p, &["spike"]), at_least(p, "probes", 1)]),
            run: run_maximal,
        },
    ]
}

fn run_lps(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let d = p.usize("d");
    let mut rep = EstimateReport::new("lps_index", seed);
    let mut ok = true;
    for (i, pq) in p.list("pairs").chunks(2).enumerate() {
        let idx = lps_index(&MixedNormSpec::new(d, pq[0], pq[1]))?;
        let recip = |e: f64| if e.is_infinite() { 0.0 } else { 1.0 / e };
        let oracle = 1.0 - d as f64 * recip(pq[0]) - 2.0 * recip(pq[1]);
        let expected = if oracle.abs() <= 1e-12 {
            Criticality::Critical
        } else if oracle > 0.0 {
            Criticality::AboveCritical
        } else {
            Criticality::BelowCritical
        };
        ok &= (idx.kappa - oracle).abs() <= 1e-14 && idx.class == expected;
        let code = match idx.class {
            Criticality::AboveCritical => 1.0,
            Criticality::Critical => 0.0,
            Criticality::BelowCritical => -1.0,
        };
        rep.row("case", i as f64, "kappa", idx.kappa, 0.0).row("case", i as f64, "class", code, 0.0);
        let (regularity, integrability) = idx.class.literature_names();
        rep.note(format!(
            "p={} q={}: {} (also called {regularity} or {integrability})",
            pq[0],
            pq[1],
            idx.class.label()
        ));
    }
    rep.check("index and class", Verdict::from_bool(ok), "matches 1 - d/p - 2/q with 1/inf = 0");
    Ok(Outcome::from_reports(vec![rep]))
}

fn catalog(d: usize) -> Vec<(&'static str, DriftField)> {
    let mut f = vec![Trig::One; d];
    f[0] = Trig::Cos(2.0);
    f[1] = Trig::Sin(3.0);
    let mut modes = separable(0, 1.0, &f);
    modes.extend(separable(1, 0.5, &vec![Trig::Cos(1.0); d]));
    vec![
        ("taylor_green", DriftField::taylor_green(d, 1.0)),
        ("shear", DriftField::shear(d, 1.0)),
        ("product_modes", DriftField::modes(d, modes, "product_modes")),
    ]
}

fn lp(field: &PeriodicField, q: f64) -> f64 {
    let mag = field.magnitude();
    let cv = mag.grid().cell_volume();
    (mag.values().iter().map(|v| v.powf(q)).sum::<f64>() * cv).powf(1.0 / q)
}

fn run_young(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let (d, n) = (p.usize("d"), p.usize("n"));
    let mut rep = EstimateReport::new("mollify_young", seed);
    let mut worst: f64 = 0.0;
    for (fi, (name, b)) in catalog(d).into_iter().enumerate() {
        let raw = b.sample(0.0, n);
        for &m in &p.levels("levels") {
            let smooth = mollify(&b, m)?.sample(0.0, n);
            for &q in p.list("exponents") {
                let ratio = lp(&smooth, q) / lp(&raw, q);
                worst = worst.max(ratio);
                rep.row("m", m as f64, format!("ratio:{name}:p={q}"), ratio, 0.0);
            }
        }
        rep.value(format!("field_{fi}"), fi as f64);
    }
    let c = [0.7, -1.3, 2.1, 0.4];
    let cm = mollify(&DriftField::constant(&c[..d]), 7)?.sample(0.0, 8);
    let exact = (0..d).all(|k| cm.slice(0, k).iter().all(|&v| v == c[k]));
    rep.value("worst_ratio", worst);
    rep.check_le("Young inequality", worst, 1.0 + 1e-6);
    rep.check("constants preserved", Verdict::from_bool(exact), "bitwise on an 8^d grid");
    Ok(Outcome::from_reports(vec![rep]))
}

fn run_remainder(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let (d, n) = (p.usize("d"), p.usize("n"));
    let spec = MixedNormSpec::new(d, d as f64, f64::INFINITY);
    let grid = RemainderGrid::new(n, vec![0.0]);
    let mut rep = EstimateReport::new("remainder", seed);
    let mut monotone = true;
    for name in p.text("drifts").split(',').map(str::trim) {
        let b = catalog_drift(name, d, p.f64("gamma"))?;
        let ks: Vec<f64> = p
            .levels("levels")
            .iter()
            .map(|&m| remainder_k(&b, m, &spec, &grid))
            .collect::<critflow::Result<_>>()?;
        for (m, k) in p.levels("levels").iter().zip(&ks) {
            rep.row("m", *m as f64, format!("K:{name}"), *k, 0.0);
        }
        monotone &= ks.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    }
    rep.check("nonincreasing in m", Verdict::from_bool(monotone), "each step within 5% slack");
    Ok(Outcome::from_reports(vec![rep]))
}

fn run_maximal(p: &Params, seed: u64) -> critflow::Result<Outcome> {
    let n = p.usize("n");
    let h = p.f64("spike");
    let grid = SpectralGrid::shared(3, n);
    let len = grid.len();
    let spike_node = len / 2 + n / 2;
    let mut values = vec![0.0; len];
    values[spike_node] = h;
    let spike = PeriodicField::from_values(3, n, 1, vec![0.0], values)?;
    let smooth = DriftField::modes(3, separable(0, 1.0, &[Trig::Cos(1.0), Trig::Sin(2.0), Trig::One]), "m")
        .sample(0.0, n);
    let mut rep = EstimateReport::new("maximal", seed);
    let mut worst: f64 = 0.0;
    let mut dominates = true;
    let probes = p.usize("probes");
    for (name, field) in [("spike", &spike), ("modes", &smooth)] {
        let max = maximal_function(field);
        let mag = field.magnitude();
        let sup = mag.values().iter().cloned().fold(0.0, f64::max);
        dominates &= max.values().iter().zip(mag.values()).all(|(m, v)| m >= v);
        for j in 0..probes {
            let node = if j == 0 && name == "spike" { spike_node } else { (j * 7919 + 13) % len };
            let brute = dyadic_radii(n)
                .into_iter()
                .map(|r| ball_average_direct(field, 0, node, r))
                .fold(f64::NEG_INFINITY, f64::max);
            let diff = (brute - max.values()[node]).abs();
            // relative to the sup norm: averages far from the spike are exactly 0 by direct summation
            worst = worst.max(diff / brute.abs().max(sup));
            rep.row("node", node as f64, format!("maximal:{name}"), max.values()[node], 0.0);
        }
    }
    let constant = PeriodicField::from_values(3, n, 1, vec![0.0], vec![2.5; len])?;
    let cmax = maximal_function(&constant);
    let cdiff = cmax.values().iter().map(|v| (v - 2.5).abs()).fold(0.0, f64::max);
    rep.value("brute_force_rel_diff", worst);
    rep.value("constant_diff", cdiff);
    rep.check_le("matches brute-force scan", worst, 1e-10);
    rep.check("dominates |b|", Verdict::from_bool(dominates), "pointwise on both inputs");
    rep.check_le("constant reproduced", cdiff, 1e-12);
    rep.check_ge("spike peak", maximal_function(&spike).values()[spike_node], h);
    Ok(Outcome::from_reports(vec![rep]))
}
