//! Mixture of diagonal Gaussians.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::distributional::{log_sum_exp, softmax};
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const LOG_STD_MIN: f64 = -10.0;
pub const LOG_STD_MAX: f64 = 4.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Layout of a mixture head inside a network output vector:
/// `[logits (K) | means (K·d) | log-stds (K·d)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MogHead {
    pub components: usize,
    pub act_dim: usize,
}

impl MogHead {
    pub fn new(components: usize, act_dim: usize) -> Result<Self> {
        if components == 0 || act_dim == 0 {
            return Err(Error::Config("mixture head needs components and action dims".into()));
        }
        Ok(Self {
            components,
            act_dim,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.components * (1 + 2 * self.act_dim)
    }

    /// Decodes a raw network output, clamping log-stds to
    /// `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub fn decode(&self, out: &[f64]) -> Result<MogPolicy> {
        if out.len() != self.output_dim() {
            return Err(Error::Input(format!(
                "mixture head expects {} outputs, got {}",
                self.output_dim(),
                out.len()
            )));
        }
        let (k, kd) = (self.components, self.components * self.act_dim);
        Ok(MogPolicy {
            act_dim: self.act_dim,
            logits: out[..k].to_vec(),
            means: out[k..k + kd].to_vec(),
            log_stds: out[k + kd..]
                .iter()
                .map(|s| s.clamp(LOG_STD_MIN, LOG_STD_MAX))
                .collect(),
        })
    }

    /// `log π(action)` and its gradient with respect to the raw outputs.
    /// Clamped log-std coordinates receive zero gradient.
    pub fn log_prob_grad(&self, out: &[f64], action: &[f64]) -> Result<(f64, Vec<f64>)> {
        let policy = self.decode(out)?;
        let (lp, comp) = policy.log_prob_parts(action)?;
        let (k, d) = (self.components, self.act_dim);
        let kd = k * d;
        let weights = softmax(&policy.logits);
        let mut grad = vec![0.0; self.output_dim()];
        for c in 0..k {
            let resp = (comp[c] - lp).exp();
            grad[c] = resp - weights[c];
            for j in 0..d {
                let idx = c * d + j;
                let inv_var = (-2.0 * policy.log_stds[idx]).exp();
                let diff = action[j] - policy.means[idx];
                grad[k + idx] = resp * diff * inv_var;
                let raw = out[k + kd + idx];
                if raw > LOG_STD_MIN && raw < LOG_STD_MAX {
                    grad[k + kd + idx] = resp * (diff * diff * inv_var - 1.0);
                }
            }
        }
        Ok((lp, grad))
    }
}

/// A decoded mixture: weights `softmax(logits)`, per-component means and
/// log standard deviations (diagonal covariance).
#[derive(Debug, Clone, PartialEq)]
pub struct MogPolicy {
    act_dim: usize,
    logits: Vec<f64>,
    means: Vec<f64>,
    log_stds: Vec<f64>,
}

impl MogPolicy {
    /// Builds a mixture from explicit parameters, used verbatim (no clamping).
    pub fn new(
        act_dim: usize,
        logits: Vec<f64>,
        means: Vec<f64>,
        log_stds: Vec<f64>,
    ) -> Result<Self> {
        let k = logits.len();
        if k == 0 || act_dim == 0 || means.len() != k * act_dim || log_stds.len() != k * act_dim {
            return Err(Error::Input("inconsistent mixture parameter shapes".into()));
        }
        if logits.iter().chain(&means).chain(&log_stds).any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite mixture parameter".into()));
        }
        Ok(Self {
            act_dim,
            logits,
            means,
            log_stds,
        })
    }

    pub fn n_components(&self) -> usize {
        self.logits.len()
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn weights(&self) -> Vec<f64> {
        softmax(&self.logits)
    }

    pub fn mean(&self, component: usize) -> &[f64] {
        &self.means[component * self.act_dim..(component + 1) * self.act_dim]
    }

    pub fn std(&self, component: usize) -> Vec<f64> {
        self.log_stds[component * self.act_dim..(component + 1) * self.act_dim]
            .iter()
            .map(|s| s.exp())
            .collect()
    }

    /// Total log-density and the per-component joint terms
    /// `log w_k + log N_k(action)`.
    fn log_prob_parts(&self, action: &[f64]) -> Result<(f64, Vec<f64>)> {
        if action.len() != self.act_dim {
            return Err(Error::Input(format!(
                "action has dimension {}, mixture has {}",
                action.len(),
                self.act_dim
            )));
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::Numeric("non-finite action".into()));
        }
        let lse = log_sum_exp(&self.logits);
        let d = self.act_dim;
        let comp: Vec<f64> = (0..self.n_components())
            .map(|c| {
                let mut acc = self.logits[c] - lse;
                for j in 0..d {
                    let ls = self.log_stds[c * d + j];
                    let z = (action[j] - self.means[c * d + j]) * (-ls).exp();
                    acc += -0.5 * z * z - ls - HALF_LN_2PI;
                }
                acc
            })
            .collect();
        Ok((log_sum_exp(&comp), comp))
    }

    /// `log Σ_k w_k N(action; μ_k, diag σ_k²)` via log-sum-exp.
    pub fn log_prob(&self, action: &[f64]) -> Result<f64> {
        Ok(self.log_prob_parts(action)?.0)
    }

    fn draw_component(&self, rng: &mut Rng) -> usize {
        let w = self.weights();
        let mut u: f64 = rng.random();
        for (c, p) in w.iter().enumerate() {
            if u < *p {
                return c;
            }
            u -= p;
        }
        w.len() - 1
    }

    /// Draws a component by weight, then a diagonal Gaussian sample from it.
    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let c = self.draw_component(rng);
        let d = self.act_dim;
        (0..d)
            .map(|j| {
                let n: f64 = rng.sample(StandardNormal);
                self.means[c * d + j] + self.log_stds[c * d + j].exp() * n
            })
            .collect()
    }

    /// Mean of the highest-weight component; ties go to the lowest index.
    pub fn deterministic(&self) -> Vec<f64> {
        let mut best = 0;
        for c in 1..self.n_components() {
            if self.logits[c] > self.logits[best] {
                best = c;
            }
        }
        self.mean(best).to_vec()
    }

    /// Mean of a component drawn by weight.
    pub fn deterministic_sampled_component(&self, rng: &mut Rng) -> Vec<f64> {
        let c = self.draw_component(rng);
        self.mean(c).to_vec()
    }
}
