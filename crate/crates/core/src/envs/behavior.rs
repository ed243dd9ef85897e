use rand::Rng as _;

use super::{run_episode, Env, PointMass1D};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::par::*;
use crate::rng::{Rng, Streams};

/// Data-collecting policies.
#[derive(Debug, Clone, PartialEq)]
pub enum BehaviorSpec {
    /// Pull arm 0 with probability `arm0_prob`, arm 1 otherwise.
    BanditMixture { arm0_prob: f64 },
    /// ε-greedy around the shortest-path policy. Episode `i` uses
    /// `epsilons[i % epsilons.len()]`, so several data sources of different
    /// quality can be interleaved.
    GridEpsilon { epsilons: Vec<f64> },
    /// Proportional controller with probability `expert_ratio`, uniform
    /// action in `[-1, 1]` otherwise. The choice is made once per episode
    /// when `per_episode` is set, else at every step.
    PointMassMixture { expert_ratio: f64, per_episode: bool },
}

impl BehaviorSpec {
    pub fn default_for(env: &Env) -> Self {
        match env {
            Env::Bandit(_) => BehaviorSpec::BanditMixture { arm0_prob: 2.0 / 3.0 },
            Env::GridWorld(_) => BehaviorSpec::GridEpsilon { epsilons: vec![0.3] },
            Env::PointMass(_) => BehaviorSpec::PointMassMixture {
                expert_ratio: 0.5,
                per_episode: true,
            },
        }
    }

    pub fn validate(&self, env: &Env) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let ok = match (self, env) {
            (BehaviorSpec::BanditMixture { arm0_prob }, Env::Bandit(_)) => unit(*arm0_prob),
            (BehaviorSpec::GridEpsilon { epsilons }, Env::GridWorld(_)) => {
                !epsilons.is_empty() && epsilons.iter().all(|&e| unit(e))
            }
            (BehaviorSpec::PointMassMixture { expert_ratio, .. }, Env::PointMass(_)) => unit(*expert_ratio),
            _ => {
                return Err(Error::Config(format!(
                    "behavior {self:?} does not apply to the {} environment",
                    env.name()
                )))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("behavior parameters out of range: {self:?}")))
        }
    }

    fn act(&self, env: &Env, episode: usize, expert: bool, obs: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        match (self, env) {
            (BehaviorSpec::BanditMixture { arm0_prob }, _) => {
                Ok(vec![if rng.random::<f64>() < *arm0_prob { 0.0 } else { 1.0 }])
            }
            (BehaviorSpec::GridEpsilon { epsilons }, Env::GridWorld(g)) => {
                let eps = epsilons[episode % epsilons.len()];
                let a = if rng.random::<f64>() < eps {
                    rng.random_range(0..4)
                } else {
                    g.optimal_action(g.cell_of(obs)?).index()
                };
                Ok(vec![a as f64])
            }
            (BehaviorSpec::PointMassMixture { expert_ratio, per_episode }, _) => {
                let use_expert = if *per_episode {
                    expert
                } else {
                    rng.random::<f64>() < *expert_ratio
                };
                Ok(vec![if use_expert {
                    PointMass1D::controller(obs)
                } else {
                    rng.random_range(-1.0..=1.0)
                }])
            }
            _ => Err(Error::Config("behavior does not match environment".into())),
        }
    }
}

/// Collects `n_episodes` behavior episodes; episode `i` uses the stream
/// `("episode", i)` of `streams`.
pub fn generate_dataset(env: &Env, behavior: &BehaviorSpec, n_episodes: usize, streams: &Streams) -> Result<Dataset> {
    behavior.validate(env)?;
    let episodes = (0..n_episodes)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream("episode", i as u64);
            let expert = match behavior {
                BehaviorSpec::PointMassMixture {
                    expert_ratio,
                    per_episode: true,
                } => rng.random::<f64>() < *expert_ratio,
                _ => false,
            };
            let policy = |obs: &[f64], rng: &mut Rng| behavior.act(env, i, expert, obs, rng);
            run_episode(env, &policy, i as u64, &mut rng)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_episodes(env.obs_dim(), env.action_space(), episodes)
}
