use rand::Rng as _;

use crate::rng::Rng;

/// One-step, single-state, two-armed bandit: arm 0 pays 1 with probability
/// 0.5 (else 0), arm 1 pays 0.9 deterministically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoArmedBandit {
    pub arm0_success: f64,
    pub arm1_payoff: f64,
}

impl Default for TwoArmedBandit {
    fn default() -> Self {
        Self {
            arm0_success: 0.5,
            arm1_payoff: 0.9,
        }
    }
}

impl TwoArmedBandit {
    pub fn expected_payoffs(&self) -> [f64; 2] {
        [self.arm0_success, self.arm1_payoff]
    }

    pub fn pull(&self, arm: usize, rng: &mut Rng) -> f64 {
        if arm == 0 {
            if rng.random::<f64>() < self.arm0_success {
                1.0
            } else {
                0.0
            }
        } else {
            self.arm1_payoff
        }
    }
}
