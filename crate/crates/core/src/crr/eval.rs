use super::cwp::cwp_select;
use super::nets::{ActionSampler, BoundActor, BoundCritic};
use crate::envs::{rollout, Env, Policy, Rollout};
use crate::error::{Error, Result};
use crate::nn::DeterministicMode;
use crate::rng::{Rng, Streams};

/// Action selection used when evaluating a trained actor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Stochastic,
    Deterministic,
    Cwp,
}

impl EvalMode {
    pub const ALL: [EvalMode; 3] = [EvalMode::Stochastic, EvalMode::Deterministic, EvalMode::Cwp];

    pub fn name(&self) -> &'static str {
        match self {
            EvalMode::Stochastic => "stochastic",
            EvalMode::Deterministic => "deterministic",
            EvalMode::Cwp => "cwp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown evaluation mode {s:?}")))
    }
}

/// A trained actor (and critic, for resampling) acting in an environment.
#[derive(Debug, Clone, Copy)]
pub struct Agent<'a> {
    pub actor: BoundActor<'a>,
    pub critic: BoundCritic<'a>,
    pub mode: EvalMode,
    pub deterministic_mode: DeterministicMode,
    pub cwp_samples: usize,
    pub cwp_beta: f64,
}

impl Policy for Agent<'_> {
    fn act(&self, observation: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        match self.mode {
            EvalMode::Stochastic => self.actor.sample(observation, rng),
            EvalMode::Deterministic => self.actor.deterministic(observation, self.deterministic_mode, rng),
            EvalMode::Cwp => cwp_select(&self.actor, &self.critic, observation, self.cwp_samples, self.cwp_beta, rng),
        }
    }
}

/// Rollouts of `agent` in `env`, checking that their interfaces agree.
pub fn evaluate(env: &Env, agent: &Agent<'_>, n_episodes: usize, streams: &Streams) -> Result<Rollout> {
    if env.action_space() != agent.actor.actor.action_space() || env.obs_dim() != agent.critic.critic.obs_dim {
        return Err(Error::Validation(format!(
            "agent does not fit the {} environment (observation dimension {}, actions {:?})",
            env.name(),
            env.obs_dim(),
            env.action_space()
        )));
    }
    rollout(env, agent, n_episodes, streams)
}
