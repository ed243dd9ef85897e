//! Random and fixed MDP instances used by the verification sweeps.

use rand::Rng as _;

use super::{TabularMdp, TabularPolicy, TabularTransition};
use crate::error::Result;
use crate::rng::{seeded, Rng};

/// A ground-truth MDP, the behavior policy that logged data in it, and the data.
#[derive(Debug, Clone)]
pub struct Instance {
    pub mdp: TabularMdp,
    pub behavior: TabularPolicy,
    pub dataset: Vec<TabularTransition>,
    pub start_states: Vec<usize>,
}

fn sample_index(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            if u < *w {
                return i;
            }
            u -= w;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn step(
    mdp: &TabularMdp,
    behavior: &TabularPolicy,
    s: usize,
    rng: &mut Rng,
) -> TabularTransition {
    let a = sample_index(behavior.row(s), rng);
    let s_next = sample_index(mdp.row(s, a), rng);
    TabularTransition::new(s, a, mdp.reward(s, a), s_next, mdp.is_terminal(s_next))
}

/// Rolls episodes from uniformly drawn start states until at least
/// `min_transitions` steps are logged, then extends the data until it is
/// coherent (every non-terminal successor also appears as a source).
pub fn sample_dataset(
    mdp: &TabularMdp,
    behavior: &TabularPolicy,
    start_states: &[usize],
    min_transitions: usize,
    max_episode_len: usize,
    rng: &mut Rng,
) -> Vec<TabularTransition> {
    let mut data = Vec::with_capacity(min_transitions + max_episode_len);
    while data.len() < min_transitions {
        let mut s = start_states[rng.random_range(0..start_states.len())];
        for _ in 0..max_episode_len {
            let t = step(mdp, behavior, s, rng);
            data.push(t);
            if t.terminal {
                break;
            }
            s = t.s_next;
        }
    }
    let mut is_source = vec![false; mdp.n_states()];
    data.iter().for_each(|t| is_source[t.s] = true);
    loop {
        let missing = data
            .iter()
            .find(|t| !t.terminal && !is_source[t.s_next])
            .map(|t| t.s_next);
        let Some(s) = missing else { break };
        let t = step(mdp, behavior, s, rng);
        is_source[s] = true;
        data.push(t);
    }
    data
}

/// A random finite MDP with sparse stochastic transitions, a random behavior
/// policy that leaves some actions unsupported, and a coherent logged dataset.
pub fn random_instance(seed: u64, max_states: usize, max_actions: usize) -> Result<Instance> {
    let mut rng = seeded(seed);
    let ns = rng.random_range(2..=max_states.max(2));
    let na = rng.random_range(2..=max_actions.max(2));
    let has_terminal = rng.random_bool(0.7);
    let terminal = if has_terminal { Some(ns - 1) } else { None };
    let discount = rng.random_range(0.5..0.95);

    let mut transition = vec![0.0; ns * na * ns];
    let mut reward = vec![0.0; ns * na];
    for s in 0..ns {
        for a in 0..na {
            let row = &mut transition[(s * na + a) * ns..(s * na + a + 1) * ns];
            if Some(s) == terminal {
                row[s] = 1.0;
                continue;
            }
            let k = rng.random_range(1..=ns.min(3));
            for _ in 0..k {
                row[rng.random_range(0..ns)] += rng.random_range(0.1..1.0);
            }
            let z: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= z);
            reward[s * na + a] = rng.random_range(0.0..1.0);
        }
    }
    let terminals: Vec<usize> = terminal.into_iter().collect();
    let mdp = TabularMdp::new(ns, na, transition, reward, discount, &terminals)?;

    let mut probs = vec![0.0; ns * na];
    for s in 0..ns {
        let row = &mut probs[s * na..(s + 1) * na];
        for p in row.iter_mut() {
            *p = if rng.random_bool(0.35) { 0.0 } else { rng.random_range(0.05..1.0) };
        }
        if row.iter().all(|p| *p == 0.0) {
            row[rng.random_range(0..na)] = 1.0;
        }
        let z: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= z);
    }
    let behavior = TabularPolicy::from_raw(na, probs);
    let start_states: Vec<usize> = (0..ns).filter(|s| Some(*s) != terminal).collect();
    let n_data = rng.random_range(10..=200);
    let dataset = sample_dataset(&mdp, &behavior, &start_states, n_data, 25, &mut rng);
    Ok(Instance {
        mdp,
        behavior,
        dataset,
        start_states,
    })
}

/// The one-state, two-armed bandit as an episodic MDP: state 0 decides,
/// state 1 is terminal. Arm payoffs are the expected rewards 0.5 and 0.9.
pub fn bandit_mdp() -> TabularMdp {
    TabularMdp::new(
        2,
        2,
        vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
        vec![0.5, 0.9, 0.0, 0.0],
        0.9,
        &[1],
    )
    .expect("bandit MDP is valid")
}

/// Fixed stochastic MDP with five decision states and one terminal state,
/// used for the sample-size trend experiment. Every decision step
/// terminates with probability at least 0.1.
pub fn trend_mdp() -> TabularMdp {
    let (ns, na) = (6, 2);
    let mut rng = seeded(0x6d_6470_7472_656e);
    let mut transition = vec![0.0; ns * na * ns];
    let mut reward = vec![0.0; ns * na];
    for s in 0..ns {
        for a in 0..na {
            let row = &mut transition[(s * na + a) * ns..(s * na + a + 1) * ns];
            if s == 5 {
                row[5] = 1.0;
                continue;
            }
            for p in row.iter_mut().take(5) {
                *p = rng.random_range(0.0..1.0);
            }
            let z: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p *= 0.85 / z);
            row[5] = 0.15;
            reward[s * na + a] = rng.random_range(0.0..1.0);
        }
    }
    TabularMdp::new(ns, na, transition, reward, 0.9, &[5]).expect("trend MDP is valid")
}
