use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sigcomp_bench::{asymmetric_config, symq_config, symq_profile};
use sigcomp_core::belief::BeliefEngine;
use sigcomp_core::model::Sender;
use sigcomp_core::simulator::{run_sim, SimulationSettings};
use sigcomp_core::swing::{build_swing_function, solve_swing, swing_integral};
use sigcomp_core::verifier::{Verifier, VerifierSettings};
use sigcomp_core::welfare::{plus_probability, w_bar};

fn swing(c: &mut Criterion) {
    let cfg = symq_config(257);
    let asym = asymmetric_config();
    let mut g = c.benchmark_group("swing");
    g.bench_function("integral", |b| b.iter(|| swing_integral(black_box(0.3), black_box(-0.31), &cfg)));
    g.bench_function("solve_point/symq", |b| b.iter(|| solve_swing(black_box(0.3), &cfg)));
    g.bench_function("solve_point/asymmetric", |b| b.iter(|| solve_swing(black_box(0.3), &asym)));
    g.sample_size(10);
    for n in [65, 129, 257] {
        let cfg = symq_config(n);
        g.bench_with_input(BenchmarkId::new("table", n), &cfg, |b, cfg| b.iter(|| build_swing_function(cfg)));
    }
    g.finish();
}

fn strategies(c: &mut Criterion) {
    let p = symq_profile();
    let mut g = c.benchmark_group("strategies");
    g.bench_function("atom", |b| b.iter(|| p.atom(Sender::Two, black_box(0.1))));
    g.bench_function("density", |b| b.iter(|| p.density(Sender::One, black_box(0.3), black_box(0.1))));
    g.bench_function("cdf", |b| b.iter(|| p.cdf(Sender::One, black_box(0.3), black_box(0.1))));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    g.bench_function("sample", |b| b.iter(|| p.sample_report(Sender::One, black_box(0.1), &mut rng)));
    g.finish();
}

fn beliefs(c: &mut Criterion) {
    let p = symq_profile();
    let e = BeliefEngine::new(&p);
    let mut g = c.benchmark_group("beliefs");
    g.bench_function("decide", |b| b.iter(|| e.decide(black_box(0.3), black_box(-0.2))));
    g.bench_function("posterior", |b| b.iter(|| e.posterior(black_box(0.3), black_box(-0.2))));
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let p = symq_profile();
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    let quick = VerifierSettings { state_grid_n: 17, report_grid_n: 128, pair_grid_n: 0, ..Default::default() };
    g.bench_function("verify/quick", |b| b.iter(|| Verifier::new(&p, quick).run()));
    let sim = SimulationSettings { draws: 20_000, ..Default::default() };
    g.bench_function("simulate/20k", |b| b.iter(|| run_sim(&p, &sim)));
    g.bench_function("plus_probability", |b| b.iter(|| plus_probability(&p, black_box(0.1))));
    g.bench_function("w_bar", |b| b.iter(|| w_bar(&p)));
    g.finish();
}

criterion_group!(benches, swing, strategies, beliefs, pipeline);
criterion_main!(benches);
