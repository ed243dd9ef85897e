use rand::Rng as _;

use super::mog::MogHead;
use crate::distributional::{log_sum_exp, softmax};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Action set of an environment. Discrete actions travel as a one-element
/// vector holding the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSpace {
    Discrete(usize),
    Continuous(usize),
}

impl ActionSpace {
    /// Width of the action encoding fed to the critic.
    pub fn encoded_dim(&self) -> usize {
        match *self {
            ActionSpace::Discrete(n) | ActionSpace::Continuous(n) => n,
        }
    }

    /// Number of reals stored per action in a dataset row.
    pub fn stored_dim(&self) -> usize {
        match *self {
            ActionSpace::Discrete(_) => 1,
            ActionSpace::Continuous(d) => d,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, ActionSpace::Discrete(_))
    }

    pub fn discrete_index(&self, action: &[f64]) -> Result<usize> {
        match *self {
            ActionSpace::Discrete(n) => {
                let a = action.first().copied().unwrap_or(f64::NAN);
                if action.len() != 1 || a < 0.0 || a.fract() != 0.0 || a as usize >= n {
                    return Err(Error::Input(format!("{action:?} is not an action index below {n}")));
                }
                Ok(a as usize)
            }
            ActionSpace::Continuous(_) => Err(Error::Input("continuous action space".into())),
        }
    }

    /// Appends the critic encoding of `action` (one-hot for discrete).
    pub fn encode_into(&self, action: &[f64], out: &mut Vec<f64>) -> Result<()> {
        match *self {
            ActionSpace::Discrete(n) => {
                let a = self.discrete_index(action)?;
                out.extend((0..n).map(|i| if i == a { 1.0 } else { 0.0 }));
            }
            ActionSpace::Continuous(d) => {
                if action.len() != d {
                    return Err(Error::Input(format!(
                        "action has dimension {}, expected {d}",
                        action.len()
                    )));
                }
                out.extend_from_slice(action);
            }
        }
        Ok(())
    }
}

/// How a policy acts when noise is turned off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeterministicMode {
    /// Mean of the highest-weight mixture component (argmax for discrete).
    #[default]
    HighestWeight,
    /// Mean of a mixture component drawn by weight.
    SampledComponent,
}

/// Softmax policy over a finite action set.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalPolicy {
    logits: Vec<f64>,
}

impl CategoricalPolicy {
    pub fn new(logits: Vec<f64>) -> Self {
        Self { logits }
    }

    pub fn probs(&self) -> Vec<f64> {
        softmax(&self.logits)
    }

    pub fn log_prob(&self, a: usize) -> f64 {
        self.logits[a] - log_sum_exp(&self.logits)
    }

    pub fn sample(&self, rng: &mut Rng) -> usize {
        let p = self.probs();
        let mut u: f64 = rng.random();
        for (i, pi) in p.iter().enumerate() {
            if u < *pi {
                return i;
            }
            u -= pi;
        }
        p.len() - 1
    }

    /// Argmax, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.logits.len() {
            if self.logits[i] > self.logits[best] {
                best = i;
            }
        }
        best
    }
}

/// Output head of the actor network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyHead {
    Mog(MogHead),
    Categorical(usize),
}

impl PolicyHead {
    pub fn for_space(space: ActionSpace, components: usize) -> Result<Self> {
        match space {
            ActionSpace::Continuous(d) => Ok(PolicyHead::Mog(MogHead::new(components, d)?)),
            ActionSpace::Discrete(n) if n > 0 => Ok(PolicyHead::Categorical(n)),
            ActionSpace::Discrete(_) => Err(Error::Config("empty discrete action set".into())),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            PolicyHead::Mog(h) => h.output_dim(),
            PolicyHead::Categorical(n) => *n,
        }
    }

    pub fn action_space(&self) -> ActionSpace {
        match self {
            PolicyHead::Mog(h) => ActionSpace::Continuous(h.act_dim),
            PolicyHead::Categorical(n) => ActionSpace::Discrete(*n),
        }
    }

    fn check_len(&self, out: &[f64]) -> Result<()> {
        if out.len() != self.output_dim() {
            return Err(Error::Input(format!(
                "policy head expects {} outputs, got {}",
                self.output_dim(),
                out.len()
            )));
        }
        Ok(())
    }

    pub fn log_prob(&self, out: &[f64], action: &[f64]) -> Result<f64> {
        match self {
            PolicyHead::Mog(h) => h.decode(out)?.log_prob(action),
            PolicyHead::Categorical(_) => {
                self.check_len(out)?;
                let a = self.action_space().discrete_index(action)?;
                Ok(CategoricalPolicy::new(out.to_vec()).log_prob(a))
            }
        }
    }

    /// `log π(action)` and its gradient with respect to the head's raw outputs.
    pub fn log_prob_grad(&self, out: &[f64], action: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self {
            PolicyHead::Mog(h) => h.log_prob_grad(out, action),
            PolicyHead::Categorical(_) => {
                self.check_len(out)?;
                let a = self.action_space().discrete_index(action)?;
                let lp = out[a] - log_sum_exp(out);
                let mut g: Vec<f64> = softmax(out).into_iter().map(|p| -p).collect();
                g[a] += 1.0;
                Ok((lp, g))
            }
        }
    }

    pub fn sample(&self, out: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        match self {
            PolicyHead::Mog(h) => Ok(h.decode(out)?.sample(rng)),
            PolicyHead::Categorical(_) => {
                self.check_len(out)?;
                Ok(vec![CategoricalPolicy::new(out.to_vec()).sample(rng) as f64])
            }
        }
    }

    pub fn deterministic(
        &self,
        out: &[f64],
        mode: DeterministicMode,
        rng: &mut Rng,
    ) -> Result<Vec<f64>> {
        match (self, mode) {
            (PolicyHead::Mog(h), DeterministicMode::HighestWeight) => Ok(h.decode(out)?.deterministic()),
            (PolicyHead::Mog(h), DeterministicMode::SampledComponent) => {
                Ok(h.decode(out)?.deterministic_sampled_component(rng))
            }
            (PolicyHead::Categorical(_), _) => {
                self.check_len(out)?;
                Ok(vec![CategoricalPolicy::new(out.to_vec()).argmax() as f64])
            }
        }
    }
}
