use critflow::grid::PeriodicField;
use critflow::ns::{divergence, leray_project, relative_divergence};
use proptest::prelude::*;

type Term = (usize, f64, i32, i32, i32, f64);

fn vector_field(d: usize, n: usize, terms: &[Term]) -> PeriodicField {
    PeriodicField::sample(d, n, d, vec![0.0], |_, x, o| {
        o[..d].fill(0.0);
        for &(c, a, k0, k1, k2, ph) in terms {
            let k = [k0 as f64, k1 as f64, k2 as f64];
            let phase: f64 = (0..d).map(|i| k[i] * x[i]).sum::<f64>() + ph;
            o[c % d] += a * phase.cos();
        }
    })
}

fn gradient_field(d: usize, n: usize, terms: &[Term]) -> PeriodicField {
    PeriodicField::sample(d, n, d, vec![0.0], |_, x, o| {
        o[..d].fill(0.0);
        for &(_, a, k0, k1, k2, ph) in terms {
            let k = [k0 as f64, k1 as f64, k2 as f64];
            let phase: f64 = (0..d).map(|i| k[i] * x[i]).sum::<f64>() + ph;
            for i in 0..d {
                o[i] -= a * k[i] * phase.sin();
            }
        }
    })
}

fn terms() -> impl Strategy<Value = Vec<Term>> {
    prop::collection::vec((0usize..3, -2.0f64..2.0, -6i32..=6, -6i32..=6, -6i32..=6, 0.0f64..6.28), 1..6)
}

fn inner(a: &PeriodicField, b: &PeriodicField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn projection_is_idempotent_and_solenoidal(ts in terms(), d in 2usize..=3) {
        let n = if d == 2 { 64 } else { 16 };
        let f = vector_field(d, n, &ts);
        let p = leray_project(&f);
        let pp = leray_project(&p);
        let scale = max_abs(p.values()).max(1e-300);
        let diff: Vec<f64> = p.values().iter().zip(pp.values()).map(|(a, b)| a - b).collect();
        prop_assert!(max_abs(&diff) <= 1e-10 * scale);
        prop_assert!(relative_divergence(&p) <= 1e-10);
        prop_assert!(max_abs(&divergence(&p, 0)) <= 1e-10 * scale.max(1.0) * n as f64);
    }

    #[test]
    fn projection_is_self_adjoint(ta in terms(), tb in terms(), d in 2usize..=3) {
        let n = if d == 2 { 64 } else { 16 };
        let (f, g) = (vector_field(d, n, &ta), vector_field(d, n, &tb));
        let lhs = inner(&leray_project(&f), &g);
        let rhs = inner(&f, &leray_project(&g));
        let scale = inner(&f, &f).sqrt() * inner(&g, &g).sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1e-300));
    }

    #[test]
    fn gradients_are_annihilated(ts in terms(), d in 2usize..=3) {
        let n = if d == 2 { 64 } else { 16 };
        let g = gradient_field(d, n, &ts);
        let p = leray_project(&g);
        prop_assert!(max_abs(p.values()) <= 1e-10 * max_abs(g.values()).max(1.0));
    }

    #[test]
    fn solenoidal_fields_are_fixed(a in -2.0f64..2.0, k in 1i32..8, l in 1i32..8) {
        // stream-function field (∂_y ψ, -∂_x ψ) with ψ = a cos(kx) cos(ly)
        let (k, l) = (k as f64, l as f64);
        let f = PeriodicField::sample(2, 64, 2, vec![0.0], |_, x, o| {
            o[0] = -a * l * (k * x[0]).cos() * (l * x[1]).sin();
            o[1] = a * k * (k * x[0]).sin() * (l * x[1]).cos();
        });
        let p = leray_project(&f);
        for (x, y) in p.values().iter().zip(f.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + y.abs()));
        }
    }
}

#[test]
fn mean_mode_passes_through() {
    let f = PeriodicField::sample(2, 8, 2, vec![0.0], |_, x, o| {
        o[0] = 0.75 + x[0].sin();
        o[1] = -0.5;
    });
    let p = leray_project(&f);
    let mean0: f64 = p.slice(0, 0).iter().sum::<f64>() / 64.0;
    let mean1: f64 = p.slice(0, 1).iter().sum::<f64>() / 64.0;
    assert!((mean0 - 0.75).abs() < 1e-14 && (mean1 + 0.5).abs() < 1e-14);
    assert!(p.slice(0, 0).iter().all(|v| (v - 0.75).abs() < 1e-14));
}
