use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use crr_core::crr::{evaluate, Agent, AdvantageSpec, EvalMode, Learner, LearnerConfig};
use crr_core::envs::{generate_dataset, BehaviorSpec, Env, PointMass1D};
use crr_core::nn::{ActionSpace, DeterministicMode};
use crr_core::par::with_threads;
use crr_core::rng::Streams;
use crr_core::tabular::{run_sweep, SweepOptions};

fn pools() -> [(&'static str, usize); 2] {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    [("rayon", all), ("single", 1)]
}

fn learner_step(c: &mut Criterion) {
    let env = Env::PointMass(PointMass1D::default());
    let behavior = BehaviorSpec::PointMassMixture { expert_ratio: 0.5, per_episode: true };
    let data = generate_dataset(&env, &behavior, 50, &Streams::new(0)).unwrap();
    let cfg = LearnerConfig { batch_size: 64, hidden_width: 64, advantage: AdvantageSpec::Mean { m: 4 }, ..LearnerConfig::default() };
    let learner = Learner::new(cfg, 2, ActionSpace::Continuous(1)).unwrap();
    let mut group = c.benchmark_group("learner_step");
    for (name, threads) in pools() {
        let mut state = learner.init_state();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_threads(threads, || learner.step(&mut state, &data).unwrap()))
        });
    }
    group.finish();
}

fn proposition_sweep(c: &mut Criterion) {
    let opts = SweepOptions { instances: 20, ..SweepOptions::default() };
    let mut group = c.benchmark_group("proposition_sweep");
    group.sample_size(10);
    for (name, threads) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_threads(threads, || run_sweep(&opts).unwrap()))
        });
    }
    group.finish();
}

fn eval_rollouts(c: &mut Criterion) {
    let env = Env::PointMass(PointMass1D::default());
    let cfg = LearnerConfig { hidden_width: 32, ..LearnerConfig::default() };
    let learner = Learner::new(cfg, 2, ActionSpace::Continuous(1)).unwrap();
    let state = learner.init_state();
    let mut group = c.benchmark_group("eval_rollouts");
    group.sample_size(10);
    for mode in [EvalMode::Stochastic, EvalMode::Cwp] {
        let agent = Agent {
            actor: learner.actor.bind(&state.actor),
            critic: learner.critic.bind(&state.critic),
            mode,
            deterministic_mode: DeterministicMode::HighestWeight,
            cwp_samples: 16,
            cwp_beta: 1.0,
        };
        for (name, threads) in pools() {
            group.bench_function(BenchmarkId::new(mode.name(), name), |b| {
                b.iter(|| with_threads(threads, || evaluate(&env, &agent, 20, &Streams::new(1)).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, learner_step, proposition_sweep, eval_rollouts);
criterion_main!(benches);
