use chartbeam::chart::{classical_mds, geodesic_distances, knn_graph, pairwise_distances, DistanceMatrix, EigenSettings};
use chartbeam::nn::{AdamConfig, AdamState, LbbConfig, LbbModel};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_channels(n: usize, len: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..len).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
        .collect()
}

fn planar_distances(n: usize) -> DistanceMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(0.0..60.0), rng.random_range(0.0..30.0)]).collect();
    DistanceMatrix::from_fn(n, |i, j| ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt())
}

fn chart_kernels(c: &mut Criterion) {
    let channels = random_channels(500, 1024, 1);
    let refs: Vec<&[Complex64]> = channels.iter().map(Vec::as_slice).collect();
    c.bench_function("pairwise_distances 500×1024", |b| b.iter(|| pairwise_distances(&refs).unwrap()));

    let dm = planar_distances(1000);
    let graph = knn_graph(&dm, 5).unwrap();
    c.bench_function("knn_graph 1000 k=5", |b| b.iter(|| knn_graph(&dm, 5).unwrap()));
    c.bench_function("geodesics 1000", |b| b.iter(|| geodesic_distances(&graph).unwrap()));

    let geo = geodesic_distances(&graph).unwrap();
    let settings = EigenSettings::default();
    c.bench_function("classical_mds 1000 D=5", |b| b.iter(|| classical_mds(&geo, 5, &settings).unwrap()));
}

fn training_step(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = LbbModel::new(5, 64, &LbbConfig::default(), 1.0, 4, 5).unwrap();
    let z = Array2::from_shape_simple_fn((100, 5), || rng.random_range(-1.0..1.0));
    let features = model.rff.forward(z.view()).unwrap();
    let targets = random_channels(100, 64, 6);
    c.bench_function("training step batch 100", |b| {
        b.iter_batched(
            || {
                let shapes: Vec<usize> = model.mlp.param_slices().iter().map(|s| s.len()).collect();
                (model.clone(), AdamState::new(AdamConfig::default(), &shapes))
            },
            |(mut m, mut adam)| {
                let (_, grads) = m.loss_and_grad(features.view(), &targets).unwrap();
                adam.step(&mut m.mlp.param_slices_mut(), &grads.param_slices());
                m
            },
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, chart_kernels, training_step);
criterion_main!(benches);
