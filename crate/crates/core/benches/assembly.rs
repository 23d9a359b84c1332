use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use foliated_dirac::assembler::{self, Sign};
use foliated_dirac::family;
use foliated_dirac::par::Mode;
use foliated_dirac::scenario::Scenario;
use foliated_dirac::C64;

const MODES: [(&str, Mode); 2] = [("sequential", Mode::Sequential), ("parallel", Mode::Parallel)];

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("family_sampling");
    group.sample_size(10);
    for (name, l, nt) in [("lapse_circle", 32, 32), ("torus3_identities", 6, 8)] {
        let sc = Scenario::bundled(name).unwrap().with_resolution(l, nt);
        for (label, mode) in MODES {
            group.bench_with_input(BenchmarkId::new(label, name), &sc, |b, sc| {
                b.iter(|| family::from_scenario_with(sc, mode).unwrap())
            });
        }
    }
    group.finish();
}

fn matvec(c: &mut Criterion) {
    let mut group = c.benchmark_group("operator_matvec");
    let sc = Scenario::bundled("torus3_identities").unwrap().with_resolution(8, 8);
    let fam = family::from_scenario(&sc).unwrap();
    let op = assembler::assemble_riemannian(&fam, &sc.time_grid().unwrap(), Sign::Plus).unwrap();
    let x: Vec<C64> = (0..op.dim()).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.5).cos())).collect();
    for (label, mode) in MODES {
        group.bench_with_input(BenchmarkId::new(label, op.dim()), &x, |b, x| b.iter(|| op.matrix.matvec_with(x, mode)));
    }
    group.finish();
}

fn axioms(c: &mut Criterion) {
    let mut group = c.benchmark_group("family_axioms");
    group.sample_size(10);
    let sc = Scenario::bundled("lapse_circle").unwrap();
    let fam = family::from_scenario(&sc).unwrap();
    for (label, mode) in MODES {
        group.bench_function(label, |b| b.iter(|| family::check_family_axioms_with(&fam, 1e-10, 0x5eed, mode).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, sampling, matvec, axioms);
criterion_main!(benches);
