use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cmpg::ca::{ca_cmpg_known, feasible_init_single_constraint, LpSolver};
use cmpg::cmdp::{induce_cmdp, primal_dual_solve, solve_cmdp_lp};
use cmpg::duality::{duality_gap_report, solve_dual};
use cmpg::envs::random::{random_joint_policy, random_strictly_feasible_cmdp};
use cmpg::envs::{
    build_congestion_game, build_grid_world, counterexample, even_split_policy, CongestionConfig,
    GridWorldConfig,
};
use cmpg::tabular::{evaluate_with, Marginalizer};
use cmpg::PrimalDualConfig;

fn evaluation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let congestion = build_congestion_game(&CongestionConfig::default()).unwrap();
    let profile = random_joint_policy(&mut rng, &congestion);
    let mut g = c.benchmark_group("evaluate");
    g.bench_function("congestion_8_agents_counts", |b| {
        b.iter(|| evaluate_with(&congestion, &profile, Marginalizer::Counts, false).unwrap())
    });
    let small = build_congestion_game(&CongestionConfig {
        n_agents: 4,
        ..Default::default()
    })
    .unwrap();
    let small_profile = random_joint_policy(&mut rng, &small);
    for (name, how) in [
        ("naive", Marginalizer::Naive),
        ("counts", Marginalizer::Counts),
    ] {
        g.bench_function(format!("congestion_4_agents_{name}"), |b| {
            b.iter(|| evaluate_with(&small, &small_profile, how, false).unwrap())
        });
    }
    let grid = build_grid_world(&GridWorldConfig::default()).unwrap();
    let grid_profile = random_joint_policy(&mut rng, &grid);
    g.bench_function("grid_world", |b| {
        b.iter(|| evaluate_with(&grid, &grid_profile, Marginalizer::Auto, false).unwrap())
    });
    g.finish();
}

fn cmdp_solvers(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let model = random_strictly_feasible_cmdp(&mut rng, 5, 3, 4, 0.3);
    let mut g = c.benchmark_group("cmdp");
    g.bench_function("lp_5x3x4", |b| b.iter(|| solve_cmdp_lp(&model).unwrap()));
    let cfg = PrimalDualConfig::new(4.0, 0.1, model.slater_constant(), 4, 5, 3)
        .unwrap()
        .with_iterations(10_000);
    g.bench_function("primal_dual_10k", |b| {
        b.iter(|| primal_dual_solve(&model, &cfg).unwrap())
    });
    let grid = build_grid_world(&GridWorldConfig::default()).unwrap();
    let start = feasible_init_single_constraint(&grid).unwrap();
    g.bench_function("grid_induce_and_lp", |b| {
        b.iter(|| solve_cmdp_lp(&induce_cmdp(&grid, 0, &start).unwrap()).unwrap())
    });
    g.finish();
}

fn coordinate_ascent(c: &mut Criterion) {
    let mut g = c.benchmark_group("ca_known");
    g.sample_size(10);
    let cfg = CongestionConfig::default();
    let game = build_congestion_game(&cfg).unwrap();
    let start = even_split_policy(&cfg).unwrap();
    g.bench_function("congestion_8_agents", |b| {
        b.iter_batched(
            || start.clone(),
            |s| ca_cmpg_known(&game, &s, 0.05, None, &mut LpSolver).unwrap(),
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

fn duality(c: &mut Criterion) {
    let game = counterexample();
    let mut g = c.benchmark_group("duality");
    g.bench_function("solve_dual", |b| b.iter(|| solve_dual(&game, 2.0).unwrap()));
    g.sample_size(10);
    g.bench_function("full_report", |b| {
        b.iter(|| duality_gap_report(&game).unwrap())
    });
    g.finish();
}

criterion_group!(
    benches,
    evaluation,
    cmdp_solvers,
    coordinate_ascent,
    duality
);
criterion_main!(benches);
