use avd_core::diagnostics::value_gap;
use avd_core::dynamics::{integrate, IntegrationConfig};
use avd_core::ifb::run_ifb;
use avd_core::problems::{bessel_profile, catalog};
use avd_core::rates::{fit_power_law, FitMode};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn bench_ifb(c: &mut Criterion) {
    let lasso = catalog::problem("lasso-small").unwrap();
    let quartic = catalog::problem("quartic").unwrap();
    c.bench_function("ifb/lasso-small/K=1e4", |b| {
        b.iter(|| run_ifb(&lasso, 3.0, 1.0, black_box(&[5.0]), 10_000, None).unwrap())
    });
    c.bench_function("ifb/quartic/K=1e4", |b| {
        b.iter(|| {
            run_ifb(
                &quartic,
                3.0,
                1.0 / 48.0,
                black_box(&[2.0, -1.5]),
                10_000,
                None,
            )
            .unwrap()
        })
    });
}

fn bench_integrate(c: &mut Criterion) {
    let quad = catalog::problem("quadratic").unwrap();
    let flat = catalog::problem("flat-bottom").unwrap();
    let mut g = c.benchmark_group("integrate");
    g.sample_size(20);
    g.bench_function("quadratic/alpha=3/t_end=1e3", |b| {
        b.iter(|| integrate(&quad, &IntegrationConfig::new(3.0, vec![1.0], vec![0.0])).unwrap())
    });
    g.bench_function("flat-bottom/alpha=1.5/t_end=1e3", |b| {
        b.iter(|| integrate(&flat, &IntegrationConfig::new(1.5, vec![3.0], vec![0.0])).unwrap())
    });
    g.finish();
}

fn bench_bessel(c: &mut Criterion) {
    c.bench_function("bessel_profile/alpha=3/t=50", |b| {
        b.iter(|| bessel_profile(3.0, black_box(50.0)).unwrap())
    });
}

fn bench_fit(c: &mut Criterion) {
    let quad = catalog::problem("quadratic").unwrap();
    let tr = integrate(&quad, &IntegrationConfig::new(3.0, vec![1.0], vec![0.0])).unwrap();
    let gap = value_gap(&tr).unwrap();
    c.bench_function("fit_power_law/envelope", |b| {
        b.iter(|| fit_power_law(black_box(&gap), (10.0, 1000.0), FitMode::Envelope).unwrap())
    });
}

criterion_group!(benches, bench_ifb, bench_integrate, bench_bessel, bench_fit);
criterion_main!(benches);
