use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use oscillab::corpus::Builtin;
use oscillab::domain::{distance_transform, Ball, Grid, Window};
use oscillab::maps::{shear, Profile};
use oscillab::oscillation::{seminorm, OscillationParams};
use oscillab::transport::RieszOperator;
use oscillab::whitney::{image_cover, whitney_decompose};
use oscillab_bench::{family, log_field, slit_disk, square};

fn bench_seminorm(c: &mut Criterion) {
    let mut group = c.benchmark_group("seminorm");
    group.sample_size(10);
    for n in [128, 256] {
        let g = square(n, false);
        let f = log_field(&g);
        let fam = family(&g, 8);
        let params = OscillationParams::bmo(2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| seminorm(&f, &params, &fam).unwrap().value)
        });
    }
    group.finish();
}

fn bench_edt(c: &mut Criterion) {
    let mut group = c.benchmark_group("distance_transform");
    for n in [256, 1024] {
        let mask = slit_disk(&square(n, false));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| distance_transform(&mask).unwrap().max())
        });
    }
    group.finish();
}

fn bench_whitney(c: &mut Criterion) {
    let mut group = c.benchmark_group("whitney");
    let mask = slit_disk(&square(512, false));
    group.bench_function("slit_disk_512", |b| b.iter(|| whitney_decompose(&mask).unwrap().balls.len()));
    let g = square(1024, false);
    let map = shear(2.0, Profile::sine());
    group.bench_function("shear_image_1024", |b| {
        b.iter(|| image_cover(&map, &Ball::new([0.0; 3], 0.3), &g).unwrap().1.balls.len())
    });
    group.finish();
}

fn bench_riesz(c: &mut Criterion) {
    let mut group = c.benchmark_group("riesz");
    for n in [128, 256] {
        let g = Grid::new(Window::unit(2, true).unwrap(), n).unwrap();
        let op = RieszOperator::new(&g).unwrap();
        let w = Builtin::trig(3, 4).sample(&g).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| op.apply(&w).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_seminorm, bench_edt, bench_whitney, bench_riesz);
criterion_main!(benches);
