use critflow::grid::PeriodicField;
use critflow::norms::{mixed_norm, DriftField, MixedNormSpec, ScalarFn};
use critflow::pde::{bessel_potential, fractional_sobolev_norm, solve_kolmogorov, Forcing, KolmogorovProblem};
use proptest::prelude::*;

fn mode_field(n: usize, terms: &[(f64, i32, i32, f64)], times: Vec<f64>) -> PeriodicField {
    PeriodicField::sample(2, n, 1, times, |t, x, o| {
        o[0] = terms
            .iter()
            .map(|&(a, k0, k1, ph)| a * (1.0 + t) * (k0 as f64 * x[0] + k1 as f64 * x[1] + ph).cos())
            .sum();
    })
}

fn terms() -> impl Strategy<Value = Vec<(f64, i32, i32, f64)>> {
    prop::collection::vec((-2.0f64..2.0, -4i32..=4, -4i32..=4, 0.0f64..6.28), 1..4)
}

fn l2(field: &PeriodicField, ti: usize) -> f64 {
    field.grid().l2_norm(field.slice(ti, 0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn order_zero_sobolev_norm_is_the_mixed_norm(ts in terms(), p in 1.0f64..8.0, q in 1.0f64..8.0) {
        let field = mode_field(16, &ts, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let spec = MixedNormSpec::new(2, p, q);
        let a = fractional_sobolev_norm(&field, 0.0, &spec, (0.0, 1.0)).unwrap().value;
        let b = mixed_norm(&field, &spec, (0.0, 1.0)).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn bessel_potentials_compose(ts in terms(), s in -2.0f64..2.0) {
        let field = mode_field(16, &ts, vec![0.0]);
        let back = bessel_potential(&bessel_potential(&field, s), -s);
        for (x, y) in back.values().iter().zip(field.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + y.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn unforced_diffusion_never_increases_energy(ts in terms()) {
        let n = 16;
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let mut forcing = mode_field(n, &ts, times.clone());
        for ti in 2..times.len() {
            forcing.slice_mut(ti, 0).fill(0.0);
        }
        let problem = KolmogorovProblem::forward(DriftField::zero(2), Forcing::Field(forcing), 0.0, 1.0, n, 0.01)
            .with_record_every(10);
        let report = solve_kolmogorov(&problem).unwrap();
        let sol = &report.solution;
        let start = sol.times().iter().position(|&t| t >= 0.2 - 1e-9).unwrap();
        for ti in start + 1..sol.times().len() {
            prop_assert!(l2(sol, ti) <= l2(sol, ti - 1) * (1.0 + 1e-14));
        }
    }
}

#[test]
fn constant_forcing_backward_solution_is_linear_in_time() {
    let problem =
        KolmogorovProblem::backward(DriftField::zero(2), Forcing::Scalar(ScalarFn::Constant(2.0)), 0.0, 0.5, 8, 0.01);
    let report = solve_kolmogorov(&problem).unwrap();
    let sol = &report.solution;
    for (ti, &t) in sol.times().iter().enumerate() {
        for v in sol.slice(ti, 0) {
            assert!((v - 2.0 * (0.5 - t)).abs() < 1e-12);
        }
    }
}
