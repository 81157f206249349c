use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use etp_bench::{blended_shell, sharp_shell, small_rect};
use etp_core::specfun::sph_bessel_j_array_scaled;
use etp_core::{grid_eval, locate_zeros, Complex64, DeterminantFn, ZeroFindOptions};

fn bessel(c: &mut Criterion) {
    let z = Complex64::new(37.5, 4.2);
    c.bench_function("bessel_j_l0_to_20", |b| b.iter(|| sph_bessel_j_array_scaled(20, black_box(z))));
}

fn determinant(c: &mut Criterion) {
    let mut g = c.benchmark_group("determinant_eval");
    for (name, p) in [("sharp", sharp_shell()), ("blended", blended_shell())] {
        let df = DeterminantFn::new(p, 0).with_memo(false);
        g.bench_function(name, |b| b.iter(|| df.eval(black_box(Complex64::new(12.3, 0.7))).unwrap()));
    }
    g.finish();
}

fn grid(c: &mut Criterion) {
    let df = DeterminantFn::new(sharp_shell(), 1).with_memo(false);
    let rect = small_rect();
    c.bench_function("grid_16x8", |b| b.iter(|| grid_eval(&df, &rect, 16, 8).unwrap()));
}

fn zeros(c: &mut Criterion) {
    let rect = small_rect();
    let opts = ZeroFindOptions::default();
    let mut g = c.benchmark_group("locate_zeros");
    g.sample_size(10);
    g.bench_function("sharp_l0", |b| {
        b.iter(|| {
            let df = DeterminantFn::new(sharp_shell(), 0);
            locate_zeros(&df, &rect, &opts).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, bessel, determinant, grid, zeros);
criterion_main!(benches);
