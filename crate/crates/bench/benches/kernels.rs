use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use critflow::flow::{simulate_flow, FlowConfig};
use critflow::grid::PeriodicField;
use critflow::norms::{DriftField, ScalarFn};
use critflow::ns::leray_project;
use critflow::pde::{solve_kolmogorov, Forcing, KolmogorovProblem};

fn euler(c: &mut Criterion) {
    let b = DriftField::taylor_green(3, 1.0);
    let cfg = FlowConfig::new(0.0, 0.1, 1e-3, 1000, 1);
    c.bench_function("euler 3-D taylor-green, 1000 paths x 100 steps", |bench| {
        bench.iter(|| simulate_flow(black_box(&b), &cfg, &[1.0, 2.0, 3.0]).unwrap())
    });
}

fn leray(c: &mut Criterion) {
    for (d, n) in [(2usize, 64usize), (3, 32)] {
        let f = PeriodicField::sample(d, n, d, vec![0.0], |_, x, o| {
            for (a, slot) in o.iter_mut().enumerate() {
                *slot = (x[a] + 2.0 * x[(a + 1) % d]).sin();
            }
        });
        c.bench_function(&format!("leray projection {d}-D n={n}"), |bench| {
            bench.iter_batched(|| f.clone(), |f| leray_project(&f), BatchSize::SmallInput)
        });
    }
}

fn kolmogorov(c: &mut Criterion) {
    let b = DriftField::shear(2, 1.0);
    let g = ScalarFn::cosine(&[1.0, 1.0], 1.0);
    c.bench_function("kolmogorov 2-D n=32, 50 steps", |bench| {
        bench.iter(|| {
            let p = KolmogorovProblem::backward(b.clone(), Forcing::Scalar(g.clone()), 0.0, 0.05, 32, 1e-3)
                .with_record_every(50);
            solve_kolmogorov(black_box(&p)).unwrap()
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = euler, leray, kolmogorov
}
criterion_main!(benches);
