use rand::Rng as _;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Uniform-with-replacement transition indices.
pub fn sample_indices(dataset: &Dataset, batch_size: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if dataset.is_empty() {
        return Err(Error::Precondition("cannot sample from an empty dataset".into()));
    }
    if batch_size == 0 || batch_size > dataset.len() {
        return Err(Error::Precondition(format!(
            "batch size {batch_size} must be in 1..={}",
            dataset.len()
        )));
    }
    let n = dataset.len();
    Ok((0..batch_size).map(|_| rng.random_range(0..n)).collect())
}

/// Uniform-with-replacement batch of transitions.
pub fn sample_batch<'a>(
    dataset: &'a Dataset,
    batch_size: usize,
    rng: &mut Rng,
) -> Result<Vec<&'a super::Transition>> {
    let idx = sample_indices(dataset, batch_size, rng)?;
    Ok(idx.into_iter().map(|i| &dataset.transitions()[i]).collect())
}

/// Up to `K` consecutive transitions from one episode.
///
/// `horizon` is the number of steps actually covered; it is smaller than the
/// requested `K` only when the episode terminates inside the window, in which
/// case `bootstrap` is false and the last observation is never used.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceWindow {
    /// Index of the first transition in the dataset.
    pub transition: usize,
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub terminals: Vec<bool>,
    pub horizon: usize,
    pub bootstrap: bool,
    /// Discounted sum of all remaining rewards in the episode from the first
    /// step, including a truncated episode's final step.
    pub mc_return: f64,
}

impl SequenceWindow {
    /// `Σ_{j<horizon} γ^j r_j`.
    pub fn discounted_reward_sum(&self, discount: f64) -> f64 {
        let mut g = 0.0;
        let mut scale = 1.0;
        for &r in &self.rewards {
            g += scale * r;
            scale *= discount;
        }
        g
    }

    /// Observation to bootstrap from and its discount `γ^horizon`, if any.
    pub fn bootstrap_state(&self, discount: f64) -> Option<(&[f64], f64)> {
        self.bootstrap
            .then(|| (self.observations[self.horizon].as_slice(), discount.powi(self.horizon as i32)))
    }
}

/// Start positions (step indices) of every valid window of length `k`,
/// together with the window horizon.
fn window_starts(dataset: &Dataset, k: usize) -> Vec<(usize, usize)> {
    let steps = dataset.steps();
    let mut out = Vec::new();
    for ep in dataset.episodes() {
        for start in ep.clone() {
            let mut horizon = 0;
            let mut ok = false;
            for j in 0..k {
                let i = start + j;
                if i >= ep.end || dataset.transition_of_step(i).is_none() {
                    break;
                }
                horizon += 1;
                if steps[i].terminal || horizon == k {
                    ok = true;
                    break;
                }
            }
            if ok {
                out.push((start, horizon));
            }
        }
    }
    out
}

/// Number of windows covering exactly `k` steps.
pub fn count_full_windows(dataset: &Dataset, k: usize) -> usize {
    window_starts(dataset, k).iter().filter(|(_, h)| *h == k).count()
}

fn build_window(dataset: &Dataset, start: usize, horizon: usize, discount: f64) -> SequenceWindow {
    let steps = dataset.steps();
    let episode_end = dataset
        .episodes()
        .iter()
        .find(|ep| ep.contains(&start))
        .map(|ep| ep.end)
        .unwrap_or(start + 1);
    let mut observations = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    let mut rewards = Vec::with_capacity(horizon);
    let mut terminals = Vec::with_capacity(horizon);
    for i in start..start + horizon {
        observations.push(steps[i].observation.clone());
        actions.push(steps[i].action.clone());
        rewards.push(steps[i].reward);
        terminals.push(steps[i].terminal);
    }
    let last = dataset
        .transition_of_step(start + horizon - 1)
        .expect("window steps are transitions");
    observations.push(dataset.transitions()[last].next_observation.clone());
    let bootstrap = !steps[start + horizon - 1].terminal;

    let mut mc_return = 0.0;
    for i in (start..episode_end).rev() {
        mc_return = steps[i].reward + discount * mc_return;
    }

    SequenceWindow {
        transition: dataset.transition_of_step(start).expect("window start is a transition"),
        observations,
        actions,
        rewards,
        terminals,
        horizon,
        bootstrap,
        mc_return,
    }
}

/// Uniform-with-replacement batch of `k`-step windows.
pub fn sample_sequences(
    dataset: &Dataset,
    k: usize,
    batch_size: usize,
    discount: f64,
    rng: &mut Rng,
) -> Result<Vec<SequenceWindow>> {
    if k == 0 {
        return Err(Error::Precondition("window length must be at least 1".into()));
    }
    if !dataset.has_sequences() {
        return Err(Error::Config(
            "multi-step windows need a dataset that stores whole, ordered episodes".into(),
        ));
    }
    if dataset.is_empty() {
        return Err(Error::Precondition("cannot sample from an empty dataset".into()));
    }
    let longest = dataset.episodes().iter().map(|e| e.len()).max().unwrap_or(0);
    if k > longest {
        return Err(Error::Precondition(format!(
            "window length {k} exceeds the longest episode ({longest} steps)"
        )));
    }
    let starts = window_starts(dataset, k);
    if starts.is_empty() {
        return Err(Error::Precondition(format!("no valid window of length {k}")));
    }
    if batch_size == 0 {
        return Err(Error::Precondition("batch size must be positive".into()));
    }
    Ok((0..batch_size)
        .map(|_| {
            let (start, horizon) = starts[rng.random_range(0..starts.len())];
            build_window(dataset, start, horizon, discount)
        })
        .collect())
}
