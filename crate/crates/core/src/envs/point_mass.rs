use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Double integrator on a line: `x' = x + dt·v`, `v' = v + dt·clip(a)`,
/// reward `exp(-x'^2)`, episodes truncated after `episode_len` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass1D {
    pub dt: f64,
    pub episode_len: usize,
    pub start_range: f64,
}

impl Default for PointMass1D {
    fn default() -> Self {
        Self {
            dt: 0.05,
            episode_len: 100,
            start_range: 2.0,
        }
    }
}

impl PointMass1D {
    pub fn reset(&self, rng: &mut Rng) -> Vec<f64> {
        vec![rng.random_range(-self.start_range..=self.start_range), 0.0]
    }

    pub fn step(&self, observation: &[f64], action: &[f64]) -> Result<(Vec<f64>, f64)> {
        if observation.len() != 2 || action.len() != 1 {
            return Err(Error::Input("point mass expects a 2-d state and a 1-d action".into()));
        }
        if !action[0].is_finite() {
            return Err(Error::Numeric("non-finite action".into()));
        }
        let a = action[0].clamp(-1.0, 1.0);
        let (x, v) = (observation[0], observation[1]);
        let x_next = x + self.dt * v;
        let v_next = v + self.dt * a;
        Ok((vec![x_next, v_next], (-x_next * x_next).exp()))
    }

    /// The proportional controller used as the expert behavior.
    pub fn controller(observation: &[f64]) -> f64 {
        (-1.2 * observation[0] - 0.8 * observation[1]).clamp(-1.0, 1.0)
    }
}
