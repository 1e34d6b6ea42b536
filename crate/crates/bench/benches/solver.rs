use criterion::{criterion_group, criterion_main, Criterion};
use noisy_gs::oracle::{wrap_with_uniform_noise, NoiseBounds};
use noisy_gs::problems::rosenbrock_ns;
use noisy_gs::solver::{run, SolverParams};

fn rosenbrock(c: &mut Criterion) {
    let (objective, spec) = rosenbrock_ns();
    let bounds = NoiseBounds::sqrt_coupled(1e-3).unwrap();
    let oracle = wrap_with_uniform_noise(objective, bounds, 1).unwrap();
    let params = SolverParams {
        bounds,
        eps_ls: 2.1 * bounds.eps_f,
        budget: 500,
        master_seed: 1,
        ..SolverParams::default()
    };
    c.bench_function("rosenbrock_500_iterations", |b| {
        b.iter(|| run(&oracle, &spec.default_start, &params).unwrap())
    });
}

criterion_group!(benches, rosenbrock);
criterion_main!(benches);
