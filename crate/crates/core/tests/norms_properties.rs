use critflow::grid::{Interpolation, PeriodicField};
use critflow::norms::maximal::ball_average_direct;
use critflow::norms::{dyadic_radii, maximal_function, mollify, separable, truncate, DriftField, Mode, Trig};
use proptest::prelude::*;

fn mode_drift(dim: usize, terms: &[(usize, f64, i32, i32, f64)]) -> DriftField {
    let modes = terms
        .iter()
        .map(|&(comp, amp, k0, k1, phase)| Mode {
            comp: comp % dim,
            amp,
            k: [k0 as f64, k1 as f64, 0.0, 0.0],
            phase,
        })
        .collect();
    DriftField::modes(dim, modes, "random modes")
}

fn grid_lp(field: &PeriodicField, p: f64) -> f64 {
    let mag = field.magnitude();
    let grid = mag.grid();
    let s: f64 = mag.values().iter().map(|v| v.powf(p)).sum();
    (s * grid.cell_volume()).powf(1.0 / p)
}

fn terms() -> impl Strategy<Value = Vec<(usize, f64, i32, i32, f64)>> {
    prop::collection::vec((0usize..2, -2.0f64..2.0, -3i32..=3, -3i32..=3, 0.0f64..6.28), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mollified_constants_are_unchanged(c0 in -5.0f64..5.0, c1 in -5.0f64..5.0, m in 1u32..40,
                                        x0 in 0.0f64..6.28, x1 in 0.0f64..6.28) {
        let b = mollify(&DriftField::constant(&[c0, c1]), m).unwrap();
        let mut out = [0.0; 2];
        b.eval(0.3, &[x0, x1], &mut out);
        prop_assert_eq!(out, [c0, c1]);
    }

    #[test]
    fn mollification_commutes_with_grid_shifts(seed_terms in terms(), m in 1u32..12, s0 in 0usize..16, s1 in 0usize..16) {
        let n = 16;
        let field = mode_drift(2, &seed_terms).sample(0.0, n);
        let shift = |f: &PeriodicField| {
            let mut v = vec![0.0; 2 * n * n];
            for c in 0..2 {
                for i in 0..n {
                    for j in 0..n {
                        v[c * n * n + i * n + j] = f.slice(0, c)[((i + s0) % n) * n + (j + s1) % n];
                    }
                }
            }
            PeriodicField::from_values(2, n, 2, vec![0.0], v).unwrap()
        };
        let a = mollify(&DriftField::grid(shift(&field), Interpolation::Cubic), m).unwrap().sample(0.0, n);
        let b = shift(&mollify(&DriftField::grid(field, Interpolation::Cubic), m).unwrap().sample(0.0, n));
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-12, "{} vs {}", x, y);
        }
    }

    #[test]
    fn mollification_does_not_increase_lp_norms(seed_terms in terms(), m in 1u32..32, p in 1.0f64..6.0) {
        let b = mode_drift(2, &seed_terms);
        let bm = mollify(&b, m).unwrap();
        let raw = grid_lp(&b.sample(0.0, 64), p);
        let smooth = grid_lp(&bm.sample(0.0, 64), p);
        prop_assert!(smooth <= raw * (1.0 + 1e-6) + 1e-12, "{} > {}", smooth, raw);
    }

    #[test]
    fn truncation_is_idempotent(gamma in 0.1f64..0.9, level in 0.5f64..20.0,
                                x0 in 0.0f64..6.28, x1 in 0.0f64..6.28, x2 in 0.0f64..6.28) {
        let b = DriftField::singular(3, gamma).unwrap();
        let once = truncate(&b, level).unwrap();
        let twice = truncate(&once, level).unwrap();
        let (mut a, mut c) = ([0.0; 3], [0.0; 3]);
        once.eval(0.0, &[x0, x1, x2], &mut a);
        twice.eval(0.0, &[x0, x1, x2], &mut c);
        prop_assert_eq!(a, c);
        prop_assert!(a.iter().map(|v| v * v).sum::<f64>().sqrt() <= level * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn maximal_function_dominates_direct_ball_averages(amp in 0.2f64..3.0, k in 1i32..4, node in 0usize..4096) {
        let modes = separable(0, amp, &[Trig::Cos(k as f64), Trig::Sin(1.0), Trig::One]);
        let field = DriftField::modes(3, modes, "product").sample(0.0, 16);
        let max = maximal_function(&field);
        for r in dyadic_radii(16) {
            let avg = ball_average_direct(&field, 0, node, r);
            prop_assert!(avg <= max.values()[node] + 1e-12, "r = {}: {} > {}", r, avg, max.values()[node]);
        }
    }
}
