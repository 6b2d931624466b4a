use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use heavytail_core::{build_matrix, simulate_path, top_eigenvalues, ProcessSpec, Seeder, TailLaw, VolSpec};
use heavytail_core::processes::GarchSpec;

fn eigenvalues(c: &mut Criterion) {
    let spec = ProcessSpec::iid(TailLaw::symmetric(1.0).unwrap());
    let mut group = c.benchmark_group("top_eigenvalues");
    for (p, n) in [(50, 50), (100, 100), (200, 200), (350, 50)] {
        let m = build_matrix(&spec, p, n, Seeder::new(1)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{p}x{n}")), &m, |b, m| {
            b.iter(|| top_eigenvalues(m, 2).unwrap())
        });
    }
    group.finish();
}

fn paths(c: &mut Criterion) {
    let z = TailLaw::symmetric(1.0).unwrap();
    let specs = [
        ("iid", ProcessSpec::iid(z)),
        ("sv", ProcessSpec::sv(z, VolSpec::ExpGaussianLinear { psi: vec![0.6, 0.8], xi_std: 1.0 })),
        ("garch", ProcessSpec::garch(GarchSpec::garch11(1.0, 0.1, 0.8).unwrap())),
    ];
    let mut group = c.benchmark_group("simulate_path_10k");
    for (name, spec) in &specs {
        group.bench_function(*name, |b| {
            let mut rng = Seeder::new(2).rng();
            b.iter(|| simulate_path(spec, 10_000, &mut rng).unwrap())
        });
    }
    group.finish();

    c.bench_function("build_matrix_iid_100x100", |b| {
        b.iter(|| build_matrix(&specs[0].1, 100, 100, Seeder::new(3)).unwrap())
    });
}

criterion_group!(benches, eigenvalues, paths);
criterion_main!(benches);
