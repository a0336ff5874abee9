use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use cholcomm::chol::{factor, CholVariant, RunConfig};
use cholcomm::kernels::{rmatmul, Mask, Update};
use cholcomm::parsim::{pxpotrf, ProcGrid};
use cholcomm::{CostParams, FlopCounter, LayoutKind, Matrix};
use cholcomm_bench::matmul_fixture;

fn factorizations(c: &mut Criterion) {
    let a = Matrix::random_spd(64, 1);
    let mut g = c.benchmark_group("factor_n64_m108");
    for v in [
        CholVariant::NaiveLeft,
        CholVariant::BlockedPotrf { block: 0 },
        CholVariant::RectangularRecursive,
        CholVariant::SquareRecursive,
    ] {
        let cfg = RunConfig::new(v, LayoutKind::BlockRecursive, 108);
        g.bench_with_input(BenchmarkId::from_parameter(v), &cfg, |b, cfg| {
            b.iter(|| factor(black_box(&a), cfg).unwrap().report.words)
        });
    }
    g.finish();
}

fn recursive_multiply(c: &mut Criterion) {
    c.bench_function("rmatmul_n64_m192", |b| {
        b.iter(|| {
            let (mut mem, [x, y, z]) = matmul_fixture(64, 192, LayoutKind::BlockRecursive);
            rmatmul(z.full(), x.full().v(), y.full().v(), Update::Overwrite, Mask::Full, &mut mem, &mut FlopCounter::new())
                .unwrap();
            mem.counters().words()
        })
    });
}

fn distributed(c: &mut Criterion) {
    let a = Matrix::random_spd(64, 2);
    let grid = ProcGrid::new(16, 16, 64).unwrap();
    c.bench_function("pxpotrf_n64_p16", |b| {
        b.iter(|| pxpotrf(black_box(&a), &grid, CostParams::default()).unwrap().report.critical.words)
    });
}

criterion_group!(benches, factorizations, recursive_multiply, distributed);
criterion_main!(benches);
