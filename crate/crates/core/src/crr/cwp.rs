use rand::Rng as _;

use super::nets::{ActionSampler, QFunction};
use crate::distributional::softmax;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Self-normalized weights `softmax(q / beta)`.
pub fn cwp_weights(q_values: &[f64], beta: f64) -> Vec<f64> {
    let scaled: Vec<f64> = q_values.iter().map(|q| q / beta).collect();
    softmax(&scaled)
}

/// Critic weighted policy: draws `n` actions from the policy and resamples
/// one in proportion to `exp(Q / beta)`. With `n = 1` the single sample is
/// returned without a resampling draw, so the random stream matches plain
/// sampling.
pub fn cwp_select(
    pi: &dyn ActionSampler,
    q: &dyn QFunction,
    obs: &[f64],
    n: usize,
    beta: f64,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    if n == 0 || !(beta > 0.0) {
        return Err(Error::Config(format!("critic weighted policy needs n >= 1 and beta > 0, got {n}, {beta}")));
    }
    let mut actions = pi.sample_n(obs, n, rng)?;
    if n == 1 {
        return Ok(actions.remove(0));
    }
    let q_values = actions.iter().map(|a| q.q(obs, a)).collect::<Result<Vec<_>>>()?;
    let w = cwp_weights(&q_values, beta);
    let mut u: f64 = rng.random();
    let mut pick = n - 1;
    for (i, wi) in w.iter().enumerate() {
        if u < *wi {
            pick = i;
            break;
        }
        u -= wi;
    }
    Ok(actions.swap_remove(pick))
}
