use anipop_core::nn::{build_mlp, mse_grad, Activation, LayerSpec, MlpSpec, Mode, Tensor};
use anipop_core::pipeline::kendall_tau;
use anipop_core::splitter::build_clusters;
use anipop_core::synthetic::synthetic_corpus;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn random_tensor(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::matrix(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn linear_layers(c: &mut Criterion) {
    let mut group = c.benchmark_group("linear_768x768_batch16");
    let spec = MlpSpec {
        layers: vec![LayerSpec::linear(768, 768, Activation::Tanh)],
    };
    let mut mlp = build_mlp(&spec, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_tensor(16, 768, &mut rng);
    let target = random_tensor(16, 768, &mut rng);
    group.bench_function("forward", |b| b.iter(|| mlp.infer(black_box(&x)).unwrap()));
    group.bench_function("forward_backward", |b| {
        b.iter(|| {
            mlp.zero_grad();
            let y = mlp.forward(black_box(&x), Mode::Train, &mut rng).unwrap();
            mlp.backward(&mse_grad(&y, &target).unwrap()).unwrap()
        })
    });
    group.finish();
}

fn kendall(c: &mut Criterion) {
    let mut group = c.benchmark_group("kendall_tau");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1_000usize, 100_000] {
        // integer-valued scores so that ties occur
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..100) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v + rng.gen_range(0..30) as f64).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| kendall_tau(black_box(&x), black_box(&y)).unwrap())
        });
    }
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let corpus = synthetic_corpus(20_000, 4);
    c.bench_function("build_clusters_20k", |b| {
        b.iter(|| build_clusters(black_box(&corpus)))
    });
}

criterion_group!(benches, linear_layers, kendall, clustering);
criterion_main!(benches);
