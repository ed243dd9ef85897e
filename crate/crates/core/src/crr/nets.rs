use crate::distributional::{mean_value, softmax, AtomGrid};
use crate::error::{Error, Result};
use crate::nn::{ActionSpace, CategoricalPolicy, DeterministicMode, PolicyHead, ResidualMlp, ResidualMlpSpec, Tape};
use crate::rng::Rng;

/// Policy network: residual MLP on the observation followed by a policy head.
#[derive(Debug, Clone)]
pub struct Actor {
    pub mlp: ResidualMlp,
    pub head: PolicyHead,
}

impl Actor {
    pub fn new(obs_dim: usize, space: ActionSpace, hidden_width: usize, n_blocks: usize, components: usize) -> Result<Self> {
        let head = PolicyHead::for_space(space, components)?;
        let mlp = ResidualMlp::new(ResidualMlpSpec::new(obs_dim, hidden_width, n_blocks, head.output_dim()))?;
        Ok(Self { mlp, head })
    }

    pub fn n_params(&self) -> usize {
        self.mlp.n_params()
    }

    pub fn action_space(&self) -> ActionSpace {
        self.head.action_space()
    }

    pub fn output(&self, params: &[f64], obs: &[f64]) -> Result<Vec<f64>> {
        self.mlp.forward(params, obs)
    }

    pub fn log_prob(&self, params: &[f64], obs: &[f64], action: &[f64]) -> Result<f64> {
        self.head.log_prob(&self.output(params, obs)?, action)
    }

    /// `log π(action|obs)` and its gradient with respect to the parameters,
    /// scaled by `scale`, accumulated into `grad`.
    pub fn log_prob_backward(
        &self,
        params: &[f64],
        obs: &[f64],
        action: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        let (out, tape) = self.mlp.forward_tape(params, obs)?;
        let (lp, mut g) = self.head.log_prob_grad(&out, action)?;
        g.iter_mut().for_each(|x| *x *= scale);
        self.mlp.backward_into(params, &tape, &g, grad)?;
        Ok(lp)
    }

    pub fn bind<'a>(&'a self, params: &'a [f64]) -> BoundActor<'a> {
        BoundActor { actor: self, params }
    }
}

/// Distributional critic: residual MLP on `[obs, encoded action]` producing
/// logits over the atom grid.
#[derive(Debug, Clone)]
pub struct Critic {
    pub mlp: ResidualMlp,
    pub grid: AtomGrid,
    pub obs_dim: usize,
    pub space: ActionSpace,
}

impl Critic {
    pub fn new(obs_dim: usize, space: ActionSpace, hidden_width: usize, n_blocks: usize, grid: AtomGrid) -> Result<Self> {
        let mlp = ResidualMlp::new(ResidualMlpSpec::new(
            obs_dim + space.encoded_dim(),
            hidden_width,
            n_blocks,
            grid.n_atoms(),
        ))?;
        Ok(Self { mlp, grid, obs_dim, space })
    }

    pub fn n_params(&self) -> usize {
        self.mlp.n_params()
    }

    pub fn input(&self, obs: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        if obs.len() != self.obs_dim {
            return Err(Error::Input(format!(
                "observation has dimension {}, critic expects {}",
                obs.len(),
                self.obs_dim
            )));
        }
        let mut x = Vec::with_capacity(self.mlp.spec().input_dim);
        x.extend_from_slice(obs);
        self.space.encode_into(action, &mut x)?;
        Ok(x)
    }

    pub fn logits(&self, params: &[f64], obs: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        self.mlp.forward(params, &self.input(obs, action)?)
    }

    pub fn logits_tape(&self, params: &[f64], obs: &[f64], action: &[f64]) -> Result<(Vec<f64>, Tape)> {
        self.mlp.forward_tape(params, &self.input(obs, action)?)
    }

    pub fn probs(&self, params: &[f64], obs: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(params, obs, action)?))
    }

    pub fn q(&self, params: &[f64], obs: &[f64], action: &[f64]) -> Result<f64> {
        Ok(mean_value(&self.grid, &self.probs(params, obs, action)?))
    }

    pub fn bind<'a>(&'a self, params: &'a [f64]) -> BoundCritic<'a> {
        BoundCritic { critic: self, params }
    }
}

/// Scalar action values.
pub trait QFunction: Sync {
    fn q(&self, obs: &[f64], action: &[f64]) -> Result<f64>;
}

/// A stochastic policy that can be sampled.
pub trait ActionSampler: Sync {
    fn sample_n(&self, obs: &[f64], n: usize, rng: &mut Rng) -> Result<Vec<Vec<f64>>>;

    fn sample(&self, obs: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        Ok(self.sample_n(obs, 1, rng)?.remove(0))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundActor<'a> {
    pub actor: &'a Actor,
    pub params: &'a [f64],
}

impl BoundActor<'_> {
    pub fn deterministic(&self, obs: &[f64], mode: DeterministicMode, rng: &mut Rng) -> Result<Vec<f64>> {
        let out = self.actor.output(self.params, obs)?;
        self.actor.head.deterministic(&out, mode, rng)
    }
}

impl ActionSampler for BoundActor<'_> {
    fn sample_n(&self, obs: &[f64], n: usize, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
        let out = self.actor.output(self.params, obs)?;
        (0..n).map(|_| self.actor.head.sample(&out, rng)).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundCritic<'a> {
    pub critic: &'a Critic,
    pub params: &'a [f64],
}

impl QFunction for BoundCritic<'_> {
    fn q(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        self.critic.q(self.params, obs, action)
    }
}

/// Exact action values of a single-state task with discrete actions.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionValueTable(pub Vec<f64>);

impl QFunction for ActionValueTable {
    fn q(&self, _obs: &[f64], action: &[f64]) -> Result<f64> {
        let a = ActionSpace::Discrete(self.0.len()).discrete_index(action)?;
        Ok(self.0[a])
    }
}

/// Observation-independent categorical policy.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedCategorical(pub Vec<f64>);

impl ActionSampler for FixedCategorical {
    fn sample_n(&self, _obs: &[f64], n: usize, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
        let logits: Vec<f64> = self.0.iter().map(|p| p.ln()).collect();
        let pi = CategoricalPolicy::new(logits);
        Ok((0..n).map(|_| vec![pi.sample(rng) as f64]).collect())
    }
}
