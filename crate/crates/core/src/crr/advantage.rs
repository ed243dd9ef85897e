use super::nets::{ActionSampler, QFunction};
use crate::data::SequenceWindow;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// How the advantage of a dataset action is estimated. `m` is the number of
/// policy samples used for the state value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvantageSpec {
    /// `Q(s,a) - mean_j Q(s, ã_j)`.
    Mean { m: usize },
    /// `Q(s,a) - max_j Q(s, ã_j)`.
    Max { m: usize },
    /// `Σ_{j<K} γ^j r_j + γ^K V(s_K) - V(s)` over a stored window.
    KStep { k: usize, m: usize },
    /// Discounted return to the end of the stored episode minus `V(s)`.
    MonteCarlo { m: usize },
}

impl Default for AdvantageSpec {
    fn default() -> Self {
        AdvantageSpec::Mean { m: 4 }
    }
}

impl AdvantageSpec {
    pub fn validate(&self) -> Result<()> {
        let (k, m) = match *self {
            AdvantageSpec::Mean { m } | AdvantageSpec::Max { m } | AdvantageSpec::MonteCarlo { m } => (1, m),
            AdvantageSpec::KStep { k, m } => (k, m),
        };
        if k == 0 || m == 0 {
            return Err(Error::Config(format!("advantage needs k >= 1 and m >= 1, got {self:?}")));
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        match *self {
            AdvantageSpec::Mean { m }
            | AdvantageSpec::Max { m }
            | AdvantageSpec::KStep { m, .. }
            | AdvantageSpec::MonteCarlo { m } => m,
        }
    }

    /// Window length the estimator consumes, if it needs stored sequences.
    pub fn window(&self) -> Option<usize> {
        match *self {
            AdvantageSpec::KStep { k, .. } => Some(k),
            AdvantageSpec::MonteCarlo { .. } => Some(1),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AdvantageSpec::Mean { .. } => "mean",
            AdvantageSpec::Max { .. } => "max",
            AdvantageSpec::KStep { .. } => "kstep",
            AdvantageSpec::MonteCarlo { .. } => "mc",
        }
    }
}

/// `V(s) ≈ (1/m) Σ_j Q(s, ã_j)` with `ã_j ~ π(·|s)`.
pub fn state_value(q: &dyn QFunction, pi: &dyn ActionSampler, obs: &[f64], m: usize, rng: &mut Rng) -> Result<f64> {
    let actions = pi.sample_n(obs, m, rng)?;
    let mut total = 0.0;
    for a in &actions {
        total += q.q(obs, a)?;
    }
    Ok(total / m as f64)
}

/// Advantage of `action` at `obs`. Sequence-based estimators read the
/// rewards and bootstrap state from `window`, which must start at `obs`.
#[allow(clippy::too_many_arguments)]
pub fn advantage(
    q: &dyn QFunction,
    pi: &dyn ActionSampler,
    obs: &[f64],
    action: &[f64],
    window: Option<&SequenceWindow>,
    spec: &AdvantageSpec,
    discount: f64,
    rng: &mut Rng,
) -> Result<f64> {
    match *spec {
        AdvantageSpec::Mean { m } | AdvantageSpec::Max { m } => {
            let q_sa = q.q(obs, action)?;
            let actions = pi.sample_n(obs, m, rng)?;
            let mut diffs = Vec::with_capacity(m);
            for a in &actions {
                diffs.push(q.q(obs, a)? - q_sa);
            }
            Ok(if matches!(spec, AdvantageSpec::Mean { .. }) {
                -diffs.iter().sum::<f64>() / m as f64
            } else {
                -diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            })
        }
        AdvantageSpec::KStep { m, .. } | AdvantageSpec::MonteCarlo { m } => {
            let w = window.ok_or_else(|| {
                Error::Config(format!("{} advantage needs stored episode sequences", spec.name()))
            })?;
            let v = state_value(q, pi, obs, m, rng)?;
            let target = if matches!(spec, AdvantageSpec::MonteCarlo { .. }) {
                w.mc_return
            } else {
                let mut g = w.discounted_reward_sum(discount);
                if let Some((s_k, scale)) = w.bootstrap_state(discount) {
                    g += scale * state_value(q, pi, s_k, m, rng)?;
                }
                g
            };
            Ok(target - v)
        }
    }
}
