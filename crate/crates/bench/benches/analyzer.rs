use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use regchain_core::analyzer::depth_game::DepthGame;
use regchain_core::analyzer::fork_game::ForkGame;
use regchain_core::analyzer::mdp::SolveOptions;
use regchain_core::analyzer::{h_ir_exact, poly_root, Polynomial};

fn solves(c: &mut Criterion) {
    let opts = SolveOptions::default();
    c.bench_function("depth_game_e3_solve", |b| b.iter(|| DepthGame::new(3).build(0.5).solve(&opts).ratio));

    let mut g = c.benchmark_group("fork_game_deviation_advantage");
    g.sample_size(20);
    for e in [3usize, 6, 8] {
        let game = ForkGame::new(e, 0.0);
        g.bench_with_input(BenchmarkId::from_parameter(e), &game, |b, game| b.iter(|| game.deviation_advantage(0.45, &opts)));
    }
    g.finish();

    let mut g = c.benchmark_group("thresholds");
    g.sample_size(10);
    g.bench_function("h_ir_exact_e6", |b| b.iter(|| h_ir_exact(6, 1e-3).unwrap()));
    g.bench_function("poly_roots", |b| {
        b.iter(|| {
            (
                poly_root(&Polynomial::frontier_bound(), 0.0, 1.0, 1e-12).unwrap(),
                poly_root(&Polynomial::release_bound(), 0.0, 0.5, 1e-12).unwrap(),
            )
        })
    });
    g.finish();
}

criterion_group!(benches, solves);
criterion_main!(benches);
