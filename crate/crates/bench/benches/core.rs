use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use epfit_core::fisher::{fisher_distorted, fisher_q};
use epfit_core::simulate::{generate, SimulationDesign};
use epfit_core::special_fn::QuadratureSpec;
use epfit_core::{epd, fit, EpdParams, FitConfig, ScoreFamily};

fn density(c: &mut Criterion) {
    let p = EpdParams::new(0.3, 1.2, 1.7).unwrap();
    c.bench_function("log_pdf", |b| b.iter(|| epd::log_pdf(black_box(0.8), &p)));
    c.bench_function("cdf", |b| b.iter(|| epd::cdf(black_box(0.8), &p).unwrap()));
    c.bench_function("sample_1000", |b| b.iter(|| epd::sample(&p, 1000, black_box(5))));
}

fn estimation(c: &mut Criterion) {
    let design = SimulationDesign::preset(1, 100).unwrap();
    let data = generate(&design, 3).unwrap();
    let mut group = c.benchmark_group("fit_ee");
    for (name, fam) in [
        ("plain", ScoreFamily::Plain),
        ("q_weighted", ScoreFamily::QWeighted { q: 0.9 }),
        ("distorted", ScoreFamily::DistortedWeighted { beta: 0.01 }),
    ] {
        let cfg = FitConfig::ee(fam, 2.0);
        group.bench_function(name, |b| b.iter(|| fit(black_box(&data), &cfg)));
    }
    group.finish();
}

fn information(c: &mut Criterion) {
    let p = EpdParams::new(0.0, 1.0, 2.0).unwrap();
    let spec = QuadratureSpec::default();
    c.bench_function("fisher_q_closed", |b| {
        b.iter(|| fisher_q(&p, black_box(0.9), 100).unwrap())
    });
    c.bench_function("fisher_distorted_quadrature", |b| {
        b.iter(|| fisher_distorted(&p, black_box(0.01), 100, &spec).unwrap())
    });
}

criterion_group!(benches, density, estimation, information);
criterion_main!(benches);
