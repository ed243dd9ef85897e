//! Desk-scale environments, behavior policies and rollouts.

mod behavior;
mod bandit;
mod gridworld;
mod point_mass;

pub use bandit::TwoArmedBandit;
pub use behavior::{generate_dataset, BehaviorSpec};
pub use gridworld::{GridAction, GridWorld};
pub use point_mass::PointMass1D;

use crate::data::{Dataset, StepRecord};
use crate::error::{Error, Result};
use crate::nn::ActionSpace;
use crate::par::*;
use crate::rng::{Rng, Streams};
use crate::tabular::TabularTransition;

/// Result of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
}

/// The observation is the full environment state for every task here.
#[derive(Debug, Clone, PartialEq)]
pub enum Env {
    Bandit(TwoArmedBandit),
    GridWorld(GridWorld),
    PointMass(PointMass1D),
}

impl Env {
    pub fn name(&self) -> &'static str {
        match self {
            Env::Bandit(_) => "bandit",
            Env::GridWorld(_) => "gridworld",
            Env::PointMass(_) => "pointmass",
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            Env::Bandit(_) => 1,
            Env::GridWorld(g) => g.n_cells(),
            Env::PointMass(_) => 2,
        }
    }

    pub fn action_space(&self) -> ActionSpace {
        match self {
            Env::Bandit(_) => ActionSpace::Discrete(2),
            Env::GridWorld(_) => ActionSpace::Discrete(4),
            Env::PointMass(_) => ActionSpace::Continuous(1),
        }
    }

    /// Episode length cap; reaching it truncates without a terminal flag.
    pub fn step_limit(&self) -> usize {
        match self {
            Env::Bandit(_) => 1,
            Env::GridWorld(g) => g.step_limit,
            Env::PointMass(p) => p.episode_len,
        }
    }

    pub fn reset(&self, rng: &mut Rng) -> Vec<f64> {
        match self {
            Env::Bandit(_) => vec![1.0],
            Env::GridWorld(g) => g.observation(g.start),
            Env::PointMass(p) => p.reset(rng),
        }
    }

    pub fn step(&self, observation: &[f64], action: &[f64], rng: &mut Rng) -> Result<Outcome> {
        match self {
            Env::Bandit(b) => {
                let arm = self.action_space().discrete_index(action)?;
                Ok(Outcome {
                    observation: observation.to_vec(),
                    reward: b.pull(arm, rng),
                    terminal: true,
                })
            }
            Env::GridWorld(g) => {
                let a = self.action_space().discrete_index(action)?;
                let cell = g.cell_of(observation)?;
                let next = g.next_cell(cell, GridAction::from_index(a));
                let done = next == g.goal;
                Ok(Outcome {
                    observation: g.observation(next),
                    reward: if done { 1.0 } else { 0.0 },
                    terminal: done,
                })
            }
            Env::PointMass(p) => {
                let (observation, reward) = p.step(observation, action)?;
                Ok(Outcome {
                    observation,
                    reward,
                    terminal: false,
                })
            }
        }
    }

    /// Number of tabular states for the discrete tasks, including the
    /// absorbing terminal state.
    pub fn tabular_size(&self) -> Option<usize> {
        match self {
            Env::Bandit(_) => Some(2),
            Env::GridWorld(g) => Some(g.n_cells()),
            Env::PointMass(_) => None,
        }
    }

    fn tabular_state(&self, observation: &[f64]) -> Result<usize> {
        match self {
            Env::Bandit(_) => Ok(0),
            Env::GridWorld(g) => g.cell_of(observation),
            Env::PointMass(_) => Err(Error::Input("the point-mass task has no tabular form".into())),
        }
    }

    /// State the tabular view sends terminal transitions to.
    pub fn tabular_terminal(&self) -> Option<usize> {
        match self {
            Env::Bandit(_) => Some(1),
            Env::GridWorld(g) => Some(g.goal),
            Env::PointMass(_) => None,
        }
    }

    /// Tabular view of a dataset collected on a discrete task.
    pub fn tabular_transitions(&self, dataset: &Dataset) -> Result<Vec<TabularTransition>> {
        let space = self.action_space();
        let terminal = self
            .tabular_terminal()
            .ok_or_else(|| Error::Input("the point-mass task has no tabular form".into()))?;
        dataset
            .transitions()
            .iter()
            .map(|t| {
                let s = self.tabular_state(&t.observation)?;
                let a = space.discrete_index(&t.action)?;
                let s_next = if t.terminal {
                    terminal
                } else {
                    self.tabular_state(&t.next_observation)?
                };
                Ok(TabularTransition::new(s, a, t.reward, s_next, t.terminal))
            })
            .collect()
    }
}

/// Anything that maps an observation to an action.
pub trait Policy: Sync {
    fn act(&self, observation: &[f64], rng: &mut Rng) -> Result<Vec<f64>>;
}

impl<F> Policy for F
where
    F: Fn(&[f64], &mut Rng) -> Result<Vec<f64>> + Sync,
{
    fn act(&self, observation: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        self(observation, rng)
    }
}

/// Runs one episode with its own random stream.
pub fn run_episode(env: &Env, policy: &dyn Policy, episode_id: u64, rng: &mut Rng) -> Result<Vec<StepRecord>> {
    let mut obs = env.reset(rng);
    let mut steps = Vec::new();
    for k in 0..env.step_limit() {
        let action = policy.act(&obs, rng)?;
        let out = env.step(&obs, &action, rng)?;
        steps.push(StepRecord {
            episode_id,
            step_index: k as u64,
            observation: obs,
            action,
            reward: out.reward,
            terminal: out.terminal,
        });
        if out.terminal {
            break;
        }
        obs = out.observation;
    }
    Ok(steps)
}

/// Episodes and return statistics of a batch of rollouts.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub episodes: Vec<Vec<StepRecord>>,
    pub returns: Vec<f64>,
}

impl Rollout {
    pub fn mean_return(&self) -> f64 {
        if self.returns.is_empty() {
            return 0.0;
        }
        self.returns.iter().sum::<f64>() / self.returns.len() as f64
    }

    /// Population standard deviation of the episode returns.
    pub fn std_return(&self) -> f64 {
        if self.returns.is_empty() {
            return 0.0;
        }
        let m = self.mean_return();
        (self.returns.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / self.returns.len() as f64).sqrt()
    }

    pub fn standard_error(&self) -> f64 {
        self.std_return() / (self.returns.len().max(1) as f64).sqrt()
    }
}

/// `n_episodes` rollouts; episode `i` draws from the stream `("episode", i)`
/// so results do not depend on scheduling.
pub fn rollout(env: &Env, policy: &dyn Policy, n_episodes: usize, streams: &Streams) -> Result<Rollout> {
    let episodes = (0..n_episodes)
        .into_par_iter()
        .map(|i| run_episode(env, policy, i as u64, &mut streams.stream("episode", i as u64)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let returns = episodes.iter().map(|e| e.iter().map(|s| s.reward).sum()).collect();
    Ok(Rollout { episodes, returns })
}
