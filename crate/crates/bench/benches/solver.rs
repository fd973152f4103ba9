use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use distviac::assembly::assemble_global;
use distviac::eikonal::{self, LinearSolverKind};
use distviac::sparse::EnvelopeCholesky;
use distviac::BcMode;
use distviac_bench::{annulus, config, slit_annulus, SIZES};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    for h in SIZES {
        let mesh = annulus(h);
        group.bench_with_input(BenchmarkId::from_parameter(mesh.n_vertices()), &mesh, |b, mesh| {
            b.iter(|| assemble_global(black_box(mesh), 0.1).unwrap())
        });
    }
    group.finish();
}

fn factorisation(c: &mut Criterion) {
    let mut group = c.benchmark_group("cholesky_factor");
    for h in SIZES {
        let mesh = annulus(h);
        let system = assemble_global(&mesh, 0.1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(mesh.n_vertices()), system.matrix(), |b, a| {
            b.iter(|| EnvelopeCholesky::factor(black_box(a)).unwrap())
        });
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let mesh = slit_annulus(0.05);
    for mode in [BcMode::DirichletOnly, BcMode::Robin, BcMode::Soner] {
        let cfg = config().with_mode(mode);
        group.bench_function(format!("{mode:?}"), |b| b.iter(|| eikonal::solve(black_box(&mesh), &cfg).unwrap()));
    }
    let mut cg = config();
    cg.linear.solver = LinearSolverKind::Cg;
    group.bench_function("Soner/cg", |b| b.iter(|| eikonal::solve(black_box(&mesh), &cg).unwrap()));
    group.finish();
}

criterion_group!(benches, assembly, factorisation, solve);
criterion_main!(benches);
