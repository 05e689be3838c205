use critflow::flow::{chaos_series_gradient, restart_flow, simulate_flow, variational_flow, FlowConfig};
use critflow::norms::DriftField;
use critflow::rng::BrownianSource;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn zero_drift_paths_are_noise_sums(seed in any::<u64>(), d in 1usize..=3, x in prop::array::uniform3(0.0f64..6.28)) {
        let cfg = FlowConfig::new(0.0, 0.2, 0.01, 6, seed);
        let ens = simulate_flow(&DriftField::zero(d), &cfg, &x[..d]).unwrap();
        let source = cfg.source(d);
        let last = ens.checkpoint_index(0.2).unwrap();
        for m in 0..6 {
            let w = source.increments(m as u64, 0, 20);
            let mut y = x[..d].to_vec();
            for k in 0..20 {
                for a in 0..d {
                    y[a] += w[k * d + a];
                }
            }
            prop_assert_eq!(ens.state(last, 0, m), &y[..]);
        }
    }

    #[test]
    fn constant_drift_has_no_chaos_terms(seed in any::<u64>(), v in prop::array::uniform2(-3.0f64..3.0)) {
        let cfg = FlowConfig::new(0.0, 0.05, 0.01, 3, seed);
        let ens = simulate_flow(&DriftField::constant(&v), &cfg, &[1.0, 2.0]).unwrap();
        let series = chaos_series_gradient(&ens, 4).unwrap();
        for n in 1..=4 {
            let term = &series.terms[n];
            for c in 0..term.checkpoints.len() {
                for m in 0..3 {
                    prop_assert!(term.matrix(0, c, 0, m).iter().all(|t| *t == 0.0));
                }
            }
        }
    }

    #[test]
    fn jacobian_determinant_stays_positive(seed in any::<u64>(), amp in 0.1f64..1.0) {
        // ‖∇b‖∞ ≤ amp and T = 0.5 keep ‖∇b‖ T < 1
        let b = DriftField::taylor_green(2, amp);
        let cfg = FlowConfig::new(0.0, 0.5, 0.01, 8, seed);
        let ens = simulate_flow(&b, &cfg, &[0.4, 1.3, 2.0, 5.0]).unwrap();
        let j = variational_flow(&ens).unwrap();
        let c = ens.checkpoint_index(0.5).unwrap();
        for p in 0..2 {
            for m in 0..8 {
                let a = j.matrix(0, c, p, m);
                prop_assert!(a[0] * a[3] - a[1] * a[2] > 0.0);
            }
        }
    }

    #[test]
    fn restart_reproduces_the_continued_flow(seed in any::<u64>(), split in 1usize..10) {
        let b = DriftField::taylor_green(2, 0.7);
        let r = split as f64 * 0.05;
        let cfg = FlowConfig::new(0.0, 0.5, 0.01, 5, seed).with_checkpoints(&[r]);
        let ens = simulate_flow(&b, &cfg, &[1.0, 2.0]).unwrap();
        let rs = restart_flow(&ens, r, 0.5, &[]).unwrap();
        let (a, z) = (ens.checkpoint_index(0.5).unwrap(), rs.checkpoint_index(0.5).unwrap());
        for m in 0..5 {
            prop_assert_eq!(ens.state(a, 0, m), rs.state(z, 0, m));
        }
    }

    #[test]
    fn noise_is_counter_based(seed in any::<u64>(), path in 0u64..1000, first in 0u64..500, split in 1usize..30) {
        let s = BrownianSource::new(seed, 3, 1e-3, 0.0);
        let whole = s.increments(path, first, 30);
        let head = s.increments(path, first, split);
        let tail = s.increments(path, first + split as u64, 30 - split);
        prop_assert_eq!(&whole[..split * 3], &head[..]);
        prop_assert_eq!(&whole[split * 3..], &tail[..]);
        let anti = BrownianSource::new(seed, 3, 1e-3, 0.0).with_antithetic(true);
        let (p0, p1) = (anti.increments(2 * path, first, 5), anti.increments(2 * path + 1, first, 5));
        prop_assert!(p0.iter().zip(&p1).all(|(a, b)| *a == -*b));
    }
}

#[test]
fn brownian_fourth_moment_matches_gaussian_value() {
    let d = 3;
    let cfg = FlowConfig::new(0.0, 0.4, 0.01, 20_000, 17).with_checkpoints(&[0.1]);
    let ens = simulate_flow(&DriftField::zero(d), &cfg, &[1.0, 1.0, 1.0]).unwrap();
    let (c1, c2) = (ens.checkpoint_index(0.1).unwrap(), ens.checkpoint_index(0.4).unwrap());
    let samples: Vec<f64> = (0..20_000)
        .map(|m| {
            let (a, b) = (ens.state(c1, 0, m), ens.state(c2, 0, m));
            let r2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
            r2 * r2
        })
        .collect();
    let (mean, se) = critflow::report::mean_se(&samples);
    let exact = (d * (d + 2)) as f64 * 0.3f64.powi(2);
    assert!((mean - exact).abs() <= 3.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn divergence_free_drift_preserves_volume_on_average() {
    let b = DriftField::taylor_green(3, 1.0);
    let cfg = FlowConfig::new(0.0, 0.5, 0.01, 4000, 23);
    let ens = simulate_flow(&b, &cfg, &[0.7, 1.9, 2.6]).unwrap();
    let j = variational_flow(&ens).unwrap();
    let c = ens.checkpoint_index(0.5).unwrap();
    let dets: Vec<f64> = (0..4000)
        .map(|m| {
            let a = j.matrix(0, c, 0, m);
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        })
        .collect();
    let (mean, se) = critflow::report::mean_se(&dets);
    // Euler products carry an O(dt) bias in the determinant
    assert!((mean - 1.0).abs() <= 3.0 * se + 0.5 * 0.01, "{mean} (se {se})");
}
