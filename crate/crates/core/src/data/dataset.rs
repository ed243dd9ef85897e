use std::collections::HashSet;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::nn::ActionSpace;

/// One logged environment step, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub episode_id: u64,
    pub step_index: u64,
    pub observation: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
}

/// `(s, a, r, s')` with its provenance. For terminal steps the next
/// observation is a copy of the observation and is never bootstrapped from.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_observation: Vec<f64>,
    pub terminal: bool,
    pub episode_id: u64,
    pub step_index: u64,
}

/// An immutable offline dataset.
///
/// Steps are stored in file order. A step yields a transition when it is
/// terminal or when the next record continues the same episode; the last
/// step of a truncated episode has no successor observation and is kept only
/// for return computations.
#[derive(Debug, Clone)]
pub struct Dataset {
    obs_dim: usize,
    action_space: ActionSpace,
    steps: Vec<StepRecord>,
    episodes: Vec<Range<usize>>,
    transitions: Vec<Transition>,
    /// `transition_of_step[i]` is the transition index built from step `i`.
    transition_of_step: Vec<Option<usize>>,
    sequential: bool,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.obs_dim == other.obs_dim
            && self.action_space == other.action_space
            && self.steps == other.steps
    }
}

impl Dataset {
    pub fn new(obs_dim: usize, action_space: ActionSpace, steps: Vec<StepRecord>) -> Result<Self> {
        if obs_dim == 0 {
            return Err(Error::Validation("observation dimension must be positive".into()));
        }
        let act_len = action_space.stored_dim();
        for (i, s) in steps.iter().enumerate() {
            if s.observation.len() != obs_dim {
                return Err(Error::Validation(format!(
                    "step {i}: observation has {} values, expected {obs_dim}",
                    s.observation.len()
                )));
            }
            if s.action.len() != act_len {
                return Err(Error::Validation(format!(
                    "step {i}: action has {} values, expected {act_len}",
                    s.action.len()
                )));
            }
            if action_space.is_discrete() {
                action_space
                    .discrete_index(&s.action)
                    .map_err(|e| Error::Validation(format!("step {i}: {e}")))?;
            }
            if !s.reward.is_finite() || s.observation.iter().chain(&s.action).any(|x| !x.is_finite())
            {
                return Err(Error::Validation(format!("step {i}: non-finite value")));
            }
        }

        let mut episodes = Vec::new();
        let mut start = 0;
        for i in 1..=steps.len() {
            if i == steps.len() || steps[i].episode_id != steps[start].episode_id {
                if start < i {
                    episodes.push(start..i);
                }
                start = i;
            }
        }

        let mut seen = HashSet::new();
        let mut sequential = true;
        for ep in &episodes {
            if !seen.insert(steps[ep.start].episode_id) {
                sequential = false;
            }
            for (k, i) in ep.clone().enumerate() {
                if steps[i].step_index != k as u64 {
                    sequential = false;
                }
                if steps[i].terminal && i + 1 != ep.end {
                    return Err(Error::Validation(format!(
                        "episode {} has a terminal step before its last step",
                        steps[i].episode_id
                    )));
                }
            }
        }

        let mut transitions = Vec::with_capacity(steps.len());
        let mut transition_of_step = vec![None; steps.len()];
        for ep in &episodes {
            for i in ep.clone() {
                let s = &steps[i];
                let next = if s.terminal {
                    Some(s.observation.clone())
                } else if i + 1 < ep.end && steps[i + 1].step_index == s.step_index + 1 {
                    Some(steps[i + 1].observation.clone())
                } else {
                    None
                };
                if let Some(next_observation) = next {
                    transition_of_step[i] = Some(transitions.len());
                    transitions.push(Transition {
                        observation: s.observation.clone(),
                        action: s.action.clone(),
                        reward: s.reward,
                        next_observation,
                        terminal: s.terminal,
                        episode_id: s.episode_id,
                        step_index: s.step_index,
                    });
                }
            }
        }

        Ok(Self {
            obs_dim,
            action_space,
            steps,
            episodes,
            transitions,
            transition_of_step,
            sequential,
        })
    }

    /// Builds a dataset from whole episodes given as step lists.
    pub fn from_episodes(
        obs_dim: usize,
        action_space: ActionSpace,
        episodes: Vec<Vec<StepRecord>>,
    ) -> Result<Self> {
        Self::new(obs_dim, action_space, episodes.into_iter().flatten().collect())
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn action_space(&self) -> ActionSpace {
        self.action_space
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn episodes(&self) -> &[Range<usize>] {
        &self.episodes
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition_of_step(&self, step: usize) -> Option<usize> {
        self.transition_of_step[step]
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Whether episodes are stored contiguously with step indices `0, 1, ...`,
    /// which multi-step windows rely on.
    pub fn has_sequences(&self) -> bool {
        self.sequential
    }

    /// Undiscounted return of every episode.
    pub fn episode_returns(&self) -> Vec<f64> {
        self.episodes
            .iter()
            .map(|ep| self.steps[ep.clone()].iter().map(|s| s.reward).sum())
            .collect()
    }
}
