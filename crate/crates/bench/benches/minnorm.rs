use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use noisy_gs::min_norm_point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bundle(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

fn min_norm(c: &mut Criterion) {
    let mut group = c.benchmark_group("min_norm_point");
    for &(n, m) in &[(2, 10), (10, 20), (50, 60), (141, 142)] {
        let columns = bundle(n, m, 7);
        group.bench_with_input(BenchmarkId::from_parameter(format!("n{n}_m{m}")), &columns, |b, cols| {
            b.iter(|| min_norm_point(std::hint::black_box(cols), 1e-12).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, min_norm);
criterion_main!(benches);
