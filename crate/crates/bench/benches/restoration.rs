use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use p4ip_bench::noisy_scene;
use p4ip_core::denoisers::{Denoiser, GaussianFilterDenoiser, NlmDenoiser};
use p4ip_core::operators::{ConvolutionPath, Kernel, LinearOperator};
use p4ip_core::solver::{p4ip_run, x_update_denoise};
use p4ip_core::{Image, SolverParams};

fn x_update(c: &mut Criterion) {
    let (clean, y) = noisy_scene(256, 4.0, 1);
    let u = Image::zeros(256, 256);
    c.bench_function("x_update_denoise 256x256", |b| {
        b.iter(|| x_update_denoise(black_box(&y), black_box(&clean), &u, 0.7).unwrap())
    });
}

fn convolution(c: &mut Criterion) {
    let (img, _) = noisy_scene(128, 1.0, 2);
    let mut group = c.benchmark_group("convolution 128x128");
    for name in ["uniform9", "cauchy15", "gaussian25"] {
        for (label, path) in [
            ("direct", ConvolutionPath::Direct),
            ("fft", ConvolutionPath::Fourier),
        ] {
            let op =
                LinearOperator::convolution_with(Kernel::by_name(name).unwrap(), 128, 128, path);
            group.bench_with_input(BenchmarkId::new(label, name), &op, |b, op| {
                b.iter(|| op.apply(black_box(&img)).unwrap())
            });
        }
    }
    group.finish();
}

fn denoisers(c: &mut Criterion) {
    let (_, y) = noisy_scene(64, 4.0, 3);
    let mut group = c.benchmark_group("denoise 64x64");
    group.sample_size(20);
    group.bench_function("nlm", |b| {
        b.iter(|| NlmDenoiser::default().denoise(black_box(&y), 1.0).unwrap())
    });
    group.bench_function("gauss", |b| {
        b.iter(|| {
            GaussianFilterDenoiser::default()
                .denoise(black_box(&y), 1.0)
                .unwrap()
        })
    });
    group.finish();
}

fn short_runs(c: &mut Criterion) {
    let (_, y) = noisy_scene(64, 1.0, 4);
    let params = SolverParams {
        iters: 10,
        ..SolverParams::denoising(1.0)
    };
    let gauss = GaussianFilterDenoiser::default();
    let mut group = c.benchmark_group("p4ip 64x64, 10 iterations");
    group.sample_size(10);
    group.bench_function("denoising", |b| {
        b.iter(|| {
            p4ip_run(
                black_box(&y),
                &LinearOperator::identity(64, 64),
                &gauss,
                &params,
            )
            .unwrap()
        })
    });
    let op = LinearOperator::convolution(Kernel::by_name("uniform9").unwrap(), 64, 64);
    let deblur = SolverParams {
        iters: 10,
        ..SolverParams::deblurring(1.0)
    };
    group.bench_function("deblurring uniform9", |b| {
        b.iter(|| p4ip_run(black_box(&y), &op, &gauss, &deblur).unwrap())
    });
    group.finish();
}

criterion_group!(benches, x_update, convolution, denoisers, short_runs);
criterion_main!(benches);
