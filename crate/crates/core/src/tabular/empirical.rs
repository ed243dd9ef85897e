use std::collections::HashSet;

use super::{TabularMdp, TabularPolicy};
use crate::error::{Error, Result};

/// One logged step `(s, a, r, s')`; `terminal` marks `s'` as a terminal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabularTransition {
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
    pub terminal: bool,
}

impl TabularTransition {
    pub fn new(s: usize, a: usize, r: f64, s_next: usize, terminal: bool) -> Self {
        Self {
            s,
            a,
            r,
            s_next,
            terminal,
        }
    }
}

/// True iff every non-terminal successor also appears as a source state.
pub fn check_coherent(
    triples: &[(usize, usize, usize)],
    n_states: usize,
    n_actions: usize,
    terminal_states: &[usize],
) -> Result<bool> {
    let mut sources = vec![false; n_states];
    for &(s, a, s_next) in triples {
        if s >= n_states || s_next >= n_states || a >= n_actions {
            return Err(Error::Input(format!(
                "transition ({s},{a},{s_next}) out of range for {n_states} states, {n_actions} actions"
            )));
        }
        sources[s] = true;
    }
    let terminal: HashSet<usize> = terminal_states.iter().copied().collect();
    Ok(triples
        .iter()
        .all(|&(_, _, s_next)| sources[s_next] || terminal.contains(&s_next)))
}

/// The empirical MDP of a dataset: count-ratio transitions and mean rewards
/// over the original states plus an absorbing sink that receives every
/// unseen `(s, a)`.
#[derive(Debug, Clone)]
pub struct EmpiricalMdp {
    n_states: usize,
    n_actions: usize,
    counts: Vec<u64>,
    total: u64,
    mdp: TabularMdp,
    mu_b: TabularPolicy,
    d_b: Vec<f64>,
}

pub fn build_empirical_mdp(
    dataset: &[TabularTransition],
    n_states: usize,
    n_actions: usize,
    discount: f64,
) -> Result<EmpiricalMdp> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::Input("need at least one state and one action".into()));
    }
    let triples: Vec<_> = dataset.iter().map(|t| (t.s, t.a, t.s_next)).collect();
    let terminals: Vec<usize> = dataset.iter().filter(|t| t.terminal).map(|t| t.s_next).collect();
    if !check_coherent(&triples, n_states, n_actions, &terminals)? {
        return Err(Error::Validation(
            "dataset is not coherent: a non-terminal successor never appears as a source".into(),
        ));
    }

    let mut counts = vec![0u64; n_states * n_actions * n_states];
    let mut reward_sum = vec![0.0; n_states * n_actions];
    for t in dataset {
        if !t.r.is_finite() {
            return Err(Error::Validation(format!("non-finite reward at ({},{})", t.s, t.a)));
        }
        counts[(t.s * n_actions + t.a) * n_states + t.s_next] += 1;
        reward_sum[t.s * n_actions + t.a] += t.r;
    }

    let sink = n_states;
    let ns = n_states + 1;
    let mut transition = vec![0.0; ns * n_actions * ns];
    let mut rewards = vec![0.0; ns * n_actions];
    let mut mu = vec![0.0; ns * n_actions];
    let mut d_b = vec![0.0; ns];
    let total = dataset.len() as u64;

    for s in 0..n_states {
        let mut state_total = 0u64;
        for a in 0..n_actions {
            let row = &counts[(s * n_actions + a) * n_states..(s * n_actions + a + 1) * n_states];
            let n_sa: u64 = row.iter().sum();
            state_total += n_sa;
            let dst = &mut transition[(s * n_actions + a) * ns..(s * n_actions + a + 1) * ns];
            if n_sa > 0 {
                for (p, &c) in dst.iter_mut().zip(row) {
                    *p = c as f64 / n_sa as f64;
                }
                rewards[s * n_actions + a] = reward_sum[s * n_actions + a] / n_sa as f64;
            } else {
                dst[sink] = 1.0;
            }
            mu[s * n_actions + a] = n_sa as f64;
        }
        let mu_row = &mut mu[s * n_actions..(s + 1) * n_actions];
        if state_total > 0 {
            mu_row.iter_mut().for_each(|m| *m /= state_total as f64);
        } else {
            mu_row.fill(1.0 / n_actions as f64);
        }
        if total > 0 {
            d_b[s] = state_total as f64 / total as f64;
        }
    }
    for a in 0..n_actions {
        transition[(sink * n_actions + a) * ns + sink] = 1.0;
        mu[sink * n_actions + a] = 1.0 / n_actions as f64;
    }

    let mdp = TabularMdp::new(ns, n_actions, transition, rewards, discount, &[sink])?;
    Ok(EmpiricalMdp {
        n_states,
        n_actions,
        counts,
        total,
        mdp,
        mu_b: TabularPolicy::from_raw(n_actions, mu),
        d_b,
    })
}

impl EmpiricalMdp {
    /// Number of states of the underlying MDP (excluding the sink).
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn sink(&self) -> usize {
        self.n_states
    }

    /// The empirical MDP itself, over `n_states + 1` states.
    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    /// Empirical behavior policy over `n_states + 1` rows (sink row uniform).
    pub fn mu_b(&self) -> &TabularPolicy {
        &self.mu_b
    }

    /// State weights `d_B` over `n_states + 1` entries (sink weight 0).
    pub fn d_b(&self) -> &[f64] {
        &self.d_b
    }

    pub fn count(&self, s: usize, a: usize, s_next: usize) -> u64 {
        self.counts[(s * self.n_actions + a) * self.n_states + s_next]
    }

    pub fn count_sa(&self, s: usize, a: usize) -> u64 {
        (0..self.n_states).map(|sn| self.count(s, a, sn)).sum()
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Appends a uniform sink row to a policy over the original states.
    pub fn extend_policy(&self, policy: &TabularPolicy) -> Result<TabularPolicy> {
        if policy.n_actions() != self.n_actions {
            return Err(Error::Input("policy action count mismatch".into()));
        }
        match policy.n_states() {
            n if n == self.n_states + 1 => Ok(policy.clone()),
            n if n == self.n_states => {
                let mut probs = policy.probs().to_vec();
                probs.extend(std::iter::repeat_n(1.0 / self.n_actions as f64, self.n_actions));
                Ok(TabularPolicy::from_raw(self.n_actions, probs))
            }
            n => Err(Error::Input(format!(
                "policy has {n} states, empirical MDP has {}",
                self.n_states
            ))),
        }
    }
}
