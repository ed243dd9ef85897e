use super::advantage::AdvantageSpec;
use super::filter::FilterSpec;
use super::losses::{actor_loss, critic_loss, BatchItem};
use super::nets::{Actor, Critic};
use super::optim::Adam;
use crate::data::{sample_indices, sample_sequences, Dataset};
use crate::distributional::AtomGrid;
use crate::error::{Error, Result};
use crate::nn::ActionSpace;
use crate::rng::Streams;

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub batch_size: usize,
    /// Target networks are overwritten with the online ones every this many steps.
    pub target_update_period: u64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub n_updates: u64,
    pub discount: f64,
    pub seed: u64,
    pub filter: FilterSpec,
    pub advantage: AdvantageSpec,
    /// Next-state action samples averaged in the critic target.
    pub critic_samples: usize,
    pub cwp_samples: usize,
    pub cwp_beta: f64,
    pub hidden_width: usize,
    pub n_blocks: usize,
    pub mog_components: usize,
    pub n_atoms: usize,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            target_update_period: 100,
            actor_lr: 1e-4,
            critic_lr: 1e-4,
            n_updates: 10_000,
            discount: 0.99,
            seed: 0,
            filter: FilterSpec::default(),
            advantage: AdvantageSpec::default(),
            critic_samples: 4,
            cwp_samples: 16,
            cwp_beta: 1.0,
            hidden_width: 64,
            n_blocks: 4,
            mog_components: 5,
            n_atoms: 21,
            v_min: 0.0,
            v_max: 100.0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.target_update_period == 0 {
            return bad("target_update_period must be positive");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return bad("discount must lie in (0, 1)");
        }
        if self.critic_samples == 0 || self.cwp_samples == 0 || !(self.cwp_beta > 0.0) {
            return bad("critic_samples, cwp_samples and cwp_beta must be positive");
        }
        if self.hidden_width == 0 || self.n_blocks == 0 || self.mog_components == 0 {
            return bad("network sizes must be positive");
        }
        self.filter.validate()?;
        self.advantage.validate()?;
        self.grid()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<AtomGrid> {
        AtomGrid::new(self.n_atoms, self.v_min, self.v_max)
    }
}

/// Everything that changes during training.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub actor: Vec<f64>,
    pub critic: Vec<f64>,
    pub target_actor: Vec<f64>,
    pub target_critic: Vec<f64>,
    pub step: u64,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub step: u64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub mean_weight: f64,
    /// Share of batch elements with a positive filter weight.
    pub accept_frac: f64,
}

/// Networks plus configuration; the mutable part lives in [`LearnerState`].
#[derive(Debug, Clone)]
pub struct Learner {
    pub config: LearnerConfig,
    pub actor: Actor,
    pub critic: Critic,
    streams: Streams,
}

impl Learner {
    pub fn new(config: LearnerConfig, obs_dim: usize, space: ActionSpace) -> Result<Self> {
        config.validate()?;
        let actor = Actor::new(obs_dim, space, config.hidden_width, config.n_blocks, config.mog_components)?;
        let critic = Critic::new(obs_dim, space, config.hidden_width, config.n_blocks, config.grid()?)?;
        let streams = Streams::new(config.seed);
        Ok(Self {
            config,
            actor,
            critic,
            streams,
        })
    }

    pub fn streams(&self) -> &Streams {
        &self.streams
    }

    pub fn init_state(&self) -> LearnerState {
        let actor = self.actor.mlp.init(&mut self.streams.stream("init", 0));
        let critic = self.critic.mlp.init(&mut self.streams.stream("init", 1));
        LearnerState {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor_opt: Adam::new(actor.len(), self.config.actor_lr),
            critic_opt: Adam::new(critic.len(), self.config.critic_lr),
            actor,
            critic,
            step: 0,
        }
    }

    /// Checks that `dataset` can feed this learner.
    pub fn check_dataset(&self, dataset: &Dataset) -> Result<()> {
        if dataset.action_space() != self.actor.action_space() || dataset.obs_dim() != self.critic.obs_dim {
            return Err(Error::Validation(format!(
                "dataset has observation dimension {} and actions {:?}; learner expects {} and {:?}",
                dataset.obs_dim(),
                dataset.action_space(),
                self.critic.obs_dim,
                self.actor.action_space()
            )));
        }
        if self.config.advantage.window().is_some() && !dataset.has_sequences() {
            return Err(Error::Config(format!(
                "{} advantage needs a dataset of whole ordered episodes",
                self.config.advantage.name()
            )));
        }
        if dataset.len() < self.config.batch_size {
            return Err(Error::Precondition(format!(
                "dataset has {} transitions, fewer than the batch size {}",
                dataset.len(),
                self.config.batch_size
            )));
        }
        Ok(())
    }

    /// One actor update and one critic update on a fresh batch.
    pub fn step(&self, state: &mut LearnerState, dataset: &Dataset) -> Result<StepMetrics> {
        let cfg = &self.config;
        let streams = self.streams.child("step", state.step);
        let mut batch_rng = streams.stream("batch", 0);
        let windows;
        let batch: Vec<BatchItem<'_>> = match cfg.advantage.window() {
            Some(k) => {
                windows = sample_sequences(dataset, k, cfg.batch_size, cfg.discount, &mut batch_rng)?;
                windows
                    .iter()
                    .map(|w| BatchItem {
                        transition: &dataset.transitions()[w.transition],
                        window: Some(w),
                    })
                    .collect()
            }
            None => sample_indices(dataset, cfg.batch_size, &mut batch_rng)?
                .into_iter()
                .map(|i| BatchItem::new(&dataset.transitions()[i]))
                .collect(),
        };

        let actor_out = actor_loss(
            &self.actor,
            &state.actor,
            &self.critic.bind(&state.critic),
            &batch,
            &cfg.filter,
            &cfg.advantage,
            cfg.discount,
            &streams.child("actor", 0),
        )?;
        let (critic_value, critic_grad) = critic_loss(
            &self.critic,
            &state.critic,
            &state.target_critic,
            &self.actor,
            &state.target_actor,
            &batch,
            cfg.critic_samples,
            cfg.discount,
            &streams.child("critic", 0),
        )?;
        state.actor_opt.step(&mut state.actor, &actor_out.grad)?;
        state.critic_opt.step(&mut state.critic, &critic_grad)?;
        state.step += 1;
        if state.step % cfg.target_update_period == 0 {
            state.target_actor.clone_from(&state.actor);
            state.target_critic.clone_from(&state.critic);
        }

        let b = batch.len() as f64;
        Ok(StepMetrics {
            step: state.step,
            actor_loss: actor_out.loss,
            critic_loss: critic_value,
            mean_weight: actor_out.weights.iter().sum::<f64>() / b,
            accept_frac: actor_out.weights.iter().filter(|w| **w > 0.0).count() as f64 / b,
        })
    }
}

/// Free-function form of [`Learner::step`].
pub fn learner_step(learner: &Learner, state: &mut LearnerState, dataset: &Dataset) -> Result<StepMetrics> {
    learner.step(state, dataset)
}
