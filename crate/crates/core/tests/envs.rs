use rand::Rng as _;

use crr_core::envs::{generate_dataset, rollout, BehaviorSpec, Env, GridWorld, PointMass1D, TwoArmedBandit};
use crr_core::rng::{Rng, Streams};
use crr_core::tabular::check_coherent;
use crr_core::Result;

fn bandit() -> Env {
    Env::Bandit(TwoArmedBandit::default())
}

fn grid() -> Env {
    Env::GridWorld(GridWorld::default())
}

fn point_mass() -> Env {
    Env::PointMass(PointMass1D::default())
}

#[test]
fn always_pulling_the_second_arm_pays_point_nine() {
    let arm2 = |_: &[f64], _: &mut Rng| -> Result<Vec<f64>> { Ok(vec![1.0]) };
    let r = rollout(&bandit(), &arm2, 1000, &Streams::new(1)).unwrap();
    assert!(r.returns.iter().all(|x| *x == 0.9));
}

#[test]
fn bandit_behavior_value() {
    let data = generate_dataset(&bandit(), &BehaviorSpec::BanditMixture { arm0_prob: 2.0 / 3.0 }, 20_000, &Streams::new(2)).unwrap();
    let returns = data.episode_returns();
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    assert!((mean - 1.9 / 3.0).abs() < 0.02, "{mean}");
}

#[test]
fn bandit_dataset_arm_proportions() {
    let data = generate_dataset(&bandit(), &BehaviorSpec::BanditMixture { arm0_prob: 2.0 / 3.0 }, 3000, &Streams::new(7)).unwrap();
    assert_eq!(data.len(), 3000);
    let arm0 = data.steps().iter().filter(|s| s.action[0] == 0.0).count() as f64;
    let sd = (3000.0 * (2.0 / 3.0) * (1.0 / 3.0f64)).sqrt();
    assert!((arm0 - 2000.0).abs() < 3.0 * sd, "{arm0}");
    assert!(data.steps().iter().all(|s| s.terminal));
}

#[test]
fn optimal_grid_policy_reaches_goal_by_shortest_path() {
    let g = GridWorld::default();
    let env = grid();
    let policy = |obs: &[f64], _: &mut Rng| -> Result<Vec<f64>> {
        Ok(vec![g.optimal_action(g.cell_of(obs)?).index() as f64])
    };
    let r = rollout(&env, &policy, 5, &Streams::new(3)).unwrap();
    for (ep, ret) in r.episodes.iter().zip(&r.returns) {
        assert_eq!(*ret, 1.0);
        assert_eq!(ep.len(), g.distance_to_goal(g.start));
        assert!(ep.last().unwrap().terminal);
    }
    assert_eq!(g.distance_to_goal(g.start), 8);
}

#[test]
fn greedy_grid_data_is_all_optimal_and_coherent() {
    let g = GridWorld::default();
    let env = grid();
    let data = generate_dataset(&env, &BehaviorSpec::GridEpsilon { epsilons: vec![0.0] }, 20, &Streams::new(4)).unwrap();
    for s in data.steps() {
        assert_eq!(s.action[0] as usize, g.optimal_action(g.cell_of(&s.observation).unwrap()).index());
    }
    let noisy = generate_dataset(&env, &BehaviorSpec::GridEpsilon { epsilons: vec![0.5] }, 200, &Streams::new(5)).unwrap();
    for d in [&data, &noisy] {
        let t = env.tabular_transitions(d).unwrap();
        let triples: Vec<_> = t.iter().map(|t| (t.s, t.a, t.s_next)).collect();
        let terminals: Vec<_> = t.iter().filter(|t| t.terminal).map(|t| t.s_next).collect();
        assert!(check_coherent(&triples, g.n_cells(), 4, &terminals).unwrap());
    }
}

#[test]
fn walls_clamp_moves() {
    use crr_core::envs::GridAction;
    let g = GridWorld::default();
    assert_eq!(g.next_cell(0, GridAction::North), 0);
    assert_eq!(g.next_cell(0, GridAction::West), 0);
    assert_eq!(g.next_cell(4, GridAction::East), 4);
    assert_eq!(g.next_cell(0, GridAction::East), 1);
    assert!(GridWorld::new(3, 3, 0, 9, 10).is_err());
}

#[test]
fn point_mass_dynamics() {
    let pm = PointMass1D::default();
    let (next, r) = pm.step(&[1.0, 0.5], &[3.0]).unwrap();
    let x = 1.0 + 0.05 * 0.5;
    assert_eq!(next, vec![x, 0.5 + 0.05 * 1.0]);
    assert!((r - (-x * x).exp()).abs() < 1e-15);
    assert!(pm.step(&[1.0, 0.5], &[f64::NAN]).is_err());
}

#[test]
fn expert_beats_random_on_point_mass() {
    let env = point_mass();
    let expert = |obs: &[f64], _: &mut Rng| -> Result<Vec<f64>> { Ok(vec![PointMass1D::controller(obs)]) };
    let random = |_: &[f64], rng: &mut Rng| -> Result<Vec<f64>> { Ok(vec![rng.random_range(-1.0..1.0)]) };
    let e = rollout(&env, &expert, 200, &Streams::new(6)).unwrap();
    let r = rollout(&env, &random, 200, &Streams::new(6)).unwrap();
    assert!(e.episodes.iter().all(|ep| ep.len() == 100 && !ep.iter().any(|s| s.terminal)));
    assert!(e.mean_return() > r.mean_return() + 20.0, "{} vs {}", e.mean_return(), r.mean_return());
}

#[test]
fn rollouts_depend_only_on_the_seed() {
    let env = point_mass();
    let random = |_: &[f64], rng: &mut Rng| -> Result<Vec<f64>> { Ok(vec![rng.random_range(-1.0..1.0)]) };
    let a = rollout(&env, &random, 16, &Streams::new(9)).unwrap();
    let b = crr_core::par::with_threads(1, || rollout(&env, &random, 16, &Streams::new(9)).unwrap());
    assert_eq!(a, b);
    let mixed = BehaviorSpec::PointMassMixture { expert_ratio: 0.5, per_episode: false };
    let d1 = generate_dataset(&env, &mixed, 8, &Streams::new(10)).unwrap();
    let d2 = crr_core::par::with_threads(1, || generate_dataset(&env, &mixed, 8, &Streams::new(10)).unwrap());
    assert_eq!(d1, d2);
}

#[test]
fn mismatched_behavior_is_rejected() {
    assert!(generate_dataset(&grid(), &BehaviorSpec::BanditMixture { arm0_prob: 0.5 }, 1, &Streams::new(0)).is_err());
    assert!(generate_dataset(&grid(), &BehaviorSpec::GridEpsilon { epsilons: vec![1.5] }, 1, &Streams::new(0)).is_err());
}
