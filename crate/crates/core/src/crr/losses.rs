use super::advantage::{advantage, AdvantageSpec};
use super::filter::{filter_weight, FilterSpec};
use super::nets::{Actor, ActionSampler, Critic, QFunction};
use crate::data::{SequenceWindow, Transition};
use crate::distributional::{divergence, mixture_target, project_target, ValueDistribution};
use crate::error::{Error, Result};
use crate::par::*;
use crate::rng::{Rng, Streams};

/// One sampled batch element. `window` is present when the advantage
/// estimator consumes stored sequences; it starts at `transition`.
#[derive(Debug, Clone, Copy)]
pub struct BatchItem<'a> {
    pub transition: &'a Transition,
    pub window: Option<&'a SequenceWindow>,
}

impl<'a> BatchItem<'a> {
    pub fn new(transition: &'a Transition) -> Self {
        Self { transition, window: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorLoss {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Adds per-element gradients in batch order so the result does not depend
/// on how the elements were scheduled.
fn reduce(parts: Vec<Result<(f64, Option<Vec<f64>>)>>, n_params: usize) -> Result<(f64, Vec<f64>)> {
    let mut loss = 0.0;
    let mut grad = vec![0.0; n_params];
    for part in parts {
        let (l, g) = part?;
        loss += l;
        if let Some(g) = g {
            grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
    }
    Ok((loss, grad))
}

/// Filter weight of every batch element. Element `i` draws its policy
/// samples from the stream `("advantage", i)`.
#[allow(clippy::too_many_arguments)]
pub fn filter_weights(
    q: &dyn QFunction,
    pi: &dyn ActionSampler,
    batch: &[BatchItem<'_>],
    filter: &FilterSpec,
    spec: &AdvantageSpec,
    discount: f64,
    streams: &Streams,
) -> Result<Vec<f64>> {
    if !filter.uses_advantage() {
        return Ok(vec![1.0; batch.len()]);
    }
    (0..batch.len())
        .into_par_iter()
        .map(|i| {
            let item = &batch[i];
            let t = item.transition;
            let mut rng = streams.stream("advantage", i as u64);
            let adv = advantage(q, pi, &t.observation, &t.action, item.window, spec, discount, &mut rng)?;
            Ok(filter_weight(filter, adv))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// `-(1/b) Σ_i w_i log π(a_i|s_i)` with the weights held fixed.
pub fn weighted_nll(actor: &Actor, params: &[f64], batch: &[BatchItem<'_>], weights: &[f64]) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Precondition("empty batch".into()));
    }
    if weights.len() != batch.len() {
        return Err(Error::Internal("one weight per batch element required".into()));
    }
    let b = batch.len() as f64;
    let n = actor.n_params();
    let parts = (0..batch.len())
        .into_par_iter()
        .map(|i| {
            let w = weights[i];
            if w == 0.0 {
                return Ok((0.0, None));
            }
            let t = batch[i].transition;
            let mut g = vec![0.0; n];
            let lp = actor.log_prob_backward(params, &t.observation, &t.action, -w / b, &mut g)?;
            Ok((-w * lp / b, Some(g)))
        })
        .collect();
    reduce(parts, n)
}

/// Filtered regression loss of the actor and its gradient. Advantages use
/// the given critic and policy samples from the actor being trained; the
/// weights do not carry gradient.
#[allow(clippy::too_many_arguments)]
pub fn actor_loss(
    actor: &Actor,
    params: &[f64],
    q: &dyn QFunction,
    batch: &[BatchItem<'_>],
    filter: &FilterSpec,
    spec: &AdvantageSpec,
    discount: f64,
    streams: &Streams,
) -> Result<ActorLoss> {
    let weights = filter_weights(q, &actor.bind(params), batch, filter, spec, discount, streams)?;
    let (loss, grad) = weighted_nll(actor, params, batch, &weights)?;
    Ok(ActorLoss { loss, grad, weights })
}

/// Projected distributional Bellman target for one transition: `m` next
/// actions from the target actor, their target-critic distributions
/// averaged, shifted by the reward and discounted (no bootstrap at
/// terminals).
#[allow(clippy::too_many_arguments)]
pub fn critic_target(
    critic: &Critic,
    target_critic_params: &[f64],
    target_actor: &Actor,
    target_actor_params: &[f64],
    t: &Transition,
    m: usize,
    discount: f64,
    rng: &mut Rng,
) -> Result<ValueDistribution> {
    let n = critic.grid.n_atoms();
    if t.terminal {
        return project_target(&critic.grid, t.reward, 0.0, &ValueDistribution::point_mass(n, 0).0);
    }
    let actions = target_actor.bind(target_actor_params).sample_n(&t.next_observation, m, rng)?;
    let dists = actions
        .iter()
        .map(|a| critic.probs(target_critic_params, &t.next_observation, a))
        .collect::<Result<Vec<_>>>()?;
    let mix = mixture_target(&dists)?;
    project_target(&critic.grid, t.reward, discount, &mix.0)
}

/// Mean cross-entropy between the online critic and the projected targets,
/// with its gradient. Element `i` draws from the stream `("critic", i)`.
#[allow(clippy::too_many_arguments)]
pub fn critic_loss(
    critic: &Critic,
    params: &[f64],
    target_critic_params: &[f64],
    target_actor: &Actor,
    target_actor_params: &[f64],
    batch: &[BatchItem<'_>],
    m: usize,
    discount: f64,
    streams: &Streams,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Precondition("empty batch".into()));
    }
    let b = batch.len() as f64;
    let n = critic.n_params();
    let parts = (0..batch.len())
        .into_par_iter()
        .map(|i| {
            let t = batch[i].transition;
            let mut rng = streams.stream("critic", i as u64);
            let target = critic_target(
                critic,
                target_critic_params,
                target_actor,
                target_actor_params,
                t,
                m,
                discount,
                &mut rng,
            )?;
            let (logits, tape) = critic.logits_tape(params, &t.observation, &t.action)?;
            let (loss, mut g) = divergence(&logits, &target.0);
            g.iter_mut().for_each(|x| *x /= b);
            let mut grad = vec![0.0; n];
            critic.mlp.backward_into(params, &tape, &g, &mut grad)?;
            Ok((loss / b, Some(grad)))
        })
        .collect();
    reduce(parts, n)
}
