//! Exact finite-MDP machinery: empirical MDPs built from logged transitions,
//! exact policy evaluation, the closed-form tabular CRR updates, and checkers
//! for the safety and improvement guarantees of the tabular algorithm.

mod checks;
mod empirical;
mod eval;
pub mod instances;
pub mod io;
mod update;

pub use checks::{
    check_policy_improvement, check_support_containment, epsilon_mdp_gap, gap_bound,
    run_sweep, trend_experiment, SweepOptions, SweepRow, TrendResult,
};
pub use empirical::{build_empirical_mdp, check_coherent, EmpiricalMdp, TabularTransition};
pub use eval::{evaluate_policy, evaluate_policy_direct, evaluate_policy_iterative};
pub use update::{
    crr_binary_update, crr_exp_update, greedy_within_support, kl_divergence, tabular_crr,
    tabular_crr_with, CrrVariant,
};

use crate::error::{Error, Result};

pub(crate) const ROW_TOL: f64 = 1e-12;
pub const DEFAULT_EVAL_TOL: f64 = 1e-12;
pub const DEFAULT_EXP_EPSILON: f64 = 0.5;

/// A finite MDP with tabular transition and reward functions.
///
/// `transition[(s * n_actions + a) * n_states + s']` is P(s'|s,a).
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    discount: f64,
    terminal: Vec<bool>,
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
        terminal_states: &[usize],
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::Input("MDP needs at least one state and one action".into()));
        }
        if transition.len() != n_states * n_actions * n_states {
            return Err(Error::Input(format!(
                "transition table has {} entries, expected {}",
                transition.len(),
                n_states * n_actions * n_states
            )));
        }
        if reward.len() != n_states * n_actions {
            return Err(Error::Input(format!(
                "reward table has {} entries, expected {}",
                reward.len(),
                n_states * n_actions
            )));
        }
        let mut terminal = vec![false; n_states];
        for &t in terminal_states {
            if t >= n_states {
                return Err(Error::Input(format!("terminal state {t} out of range")));
            }
            terminal[t] = true;
        }
        let mdp = Self {
            n_states,
            n_actions,
            transition,
            reward,
            discount,
            terminal,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    fn validate(&self) -> Result<()> {
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let row = self.row(s, a);
                if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                    return Err(Error::Validation(format!("negative or non-finite P(.|{s},{a})")));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > ROW_TOL {
                    return Err(Error::Validation(format!(
                        "P(.|{s},{a}) sums to {total}, expected 1"
                    )));
                }
                if !self.reward(s, a).is_finite() {
                    return Err(Error::Validation(format!("non-finite reward at ({s},{a})")));
                }
                if self.terminal[s] && (row[s] != 1.0 || self.reward(s, a) != 0.0) {
                    return Err(Error::Validation(format!(
                        "terminal state {s} must self-loop with reward 0"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn terminal_states(&self) -> Vec<usize> {
        (0..self.n_states).filter(|&s| self.terminal[s]).collect()
    }

    /// P(.|s,a) as a slice over successor states.
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }
}

/// A stochastic policy over a finite action set, stored row-major by state.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    n_actions: usize,
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_states * n_actions || n_actions == 0 {
            return Err(Error::Input(format!(
                "policy table has {} entries, expected {}x{}",
                probs.len(),
                n_states,
                n_actions
            )));
        }
        let p = Self { n_actions, probs };
        for s in 0..n_states {
            let row = p.row(s);
            if row.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::Validation(format!("negative probability in state {s}")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > ROW_TOL {
                return Err(Error::Validation(format!(
                    "policy row {s} sums to {total}, expected 1"
                )));
            }
        }
        Ok(p)
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_actions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_actions) {
            return Err(Error::Input("ragged policy rows".into()));
        }
        Self::new(rows.len(), n_actions, rows.concat())
    }

    pub fn n_states(&self) -> usize {
        self.probs.len() / self.n_actions
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Replaces one state's row without renormalising. Used by test hooks.
    pub fn set_row_unchecked(&mut self, s: usize, row: &[f64]) {
        self.probs[s * self.n_actions..(s + 1) * self.n_actions].copy_from_slice(row);
    }

    pub(crate) fn from_raw(n_actions: usize, probs: Vec<f64>) -> Self {
        Self { n_actions, probs }
    }
}

/// Action values and state values of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularValues {
    n_actions: usize,
    q: Vec<f64>,
    v: Vec<f64>,
}

impl TabularValues {
    pub fn new(n_actions: usize, q: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if q.len() != v.len() * n_actions {
            return Err(Error::Input("q/v dimension mismatch".into()));
        }
        Ok(Self { n_actions, q, v })
    }

    pub fn q(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.n_actions + a]
    }

    pub fn q_row(&self, s: usize) -> &[f64] {
        &self.q[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn v(&self, s: usize) -> f64 {
        self.v[s]
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q
    }

    pub fn v_table(&self) -> &[f64] {
        &self.v
    }

    pub fn n_states(&self) -> usize {
        self.v.len()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_rows_that_do_not_sum_to_one() {
        let err = TabularMdp::new(1, 1, vec![0.5], vec![0.0], 0.9, &[]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn terminal_states_must_be_absorbing() {
        let err = TabularMdp::new(2, 1, vec![0.0, 1.0, 1.0, 0.0], vec![0.0, 0.0], 0.9, &[1])
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let ok = TabularMdp::new(2, 1, vec![0.0, 1.0, 0.0, 1.0], vec![1.0, 0.0], 0.9, &[1]);
        assert!(ok.is_ok());
    }

    #[test]
    fn policy_rows_validated() {
        assert!(TabularPolicy::new(1, 2, vec![0.7, 0.2]).is_err());
        assert!(TabularPolicy::new(1, 2, vec![1.2, -0.2]).is_err());
        assert!(TabularPolicy::new(1, 2, vec![0.75, 0.25]).is_ok());
    }
}
