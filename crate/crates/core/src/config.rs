//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored; keys are
//! case-sensitive and unknown keys are rejected. Command-line overrides use
//! the same keys.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::crr::{AdvantageSpec, EvalMode, FilterSpec, LearnerConfig};
use crate::envs::{BehaviorSpec, Env, GridWorld, PointMass1D, TwoArmedBandit};
use crate::error::{Error, Result};
use crate::nn::DeterministicMode;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: String,
    pub grid_width: usize,
    pub grid_height: usize,
    pub grid_step_limit: usize,
    pub episode_len: usize,
    pub arm0_prob: f64,
    pub eps: Vec<f64>,
    pub expert_ratio: f64,
    /// `episode` or `step`: granularity of the point-mass behavior mixture.
    pub mix: String,
    pub episodes: usize,
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub seed: u64,

    pub batch_size: usize,
    pub target_update_period: u64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub n_updates: u64,
    pub discount: f64,
    pub filter: String,
    pub beta: f64,
    pub clip: f64,
    /// Empty means "pick from the filter": `max` for `binary_max`, else `mean`.
    pub advantage: String,
    pub adv_samples: usize,
    pub k: usize,
    pub critic_samples: usize,
    pub cwp_samples: usize,
    pub cwp_beta: f64,
    pub hidden_width: usize,
    pub n_blocks: usize,
    pub mog_components: usize,
    pub n_atoms: usize,
    pub v_min: f64,
    pub v_max: f64,

    pub eval_episodes: usize,
    pub eval_mode: String,
    pub eval_every: u64,
    pub cwp: bool,
    pub deterministic_mode: String,

    pub instances: usize,
    pub iterations: usize,
    pub exp_epsilon: f64,
    pub trend_seeds: usize,
    /// Negative control for `verify-tabular`: leaks probability mass outside
    /// the data support after every binary update.
    pub corrupt_update: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let l = LearnerConfig::default();
        Self {
            env: "pointmass".into(),
            grid_width: 5,
            grid_height: 5,
            grid_step_limit: 50,
            episode_len: 100,
            arm0_prob: 2.0 / 3.0,
            eps: vec![0.3],
            expert_ratio: 0.5,
            mix: "episode".into(),
            episodes: 1000,
            dataset: None,
            out: PathBuf::from("out"),
            checkpoint: None,
            seed: 0,
            batch_size: l.batch_size,
            target_update_period: l.target_update_period,
            actor_lr: l.actor_lr,
            critic_lr: l.critic_lr,
            n_updates: l.n_updates,
            discount: l.discount,
            filter: "exp".into(),
            beta: 1.0,
            clip: 20.0,
            advantage: String::new(),
            adv_samples: 4,
            k: 5,
            critic_samples: l.critic_samples,
            cwp_samples: l.cwp_samples,
            cwp_beta: l.cwp_beta,
            hidden_width: l.hidden_width,
            n_blocks: l.n_blocks,
            mog_components: l.mog_components,
            n_atoms: l.n_atoms,
            v_min: l.v_min,
            v_max: l.v_max,
            eval_episodes: 100,
            eval_mode: "deterministic".into(),
            eval_every: 1000,
            cwp: true,
            deterministic_mode: "highest_weight".into(),
            instances: 100,
            iterations: 10,
            exp_epsilon: crate::tabular::DEFAULT_EXP_EPSILON,
            trend_seeds: 3,
            corrupt_update: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "on" | "yes" => Ok(true),
        "false" | "0" | "off" | "no" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "env" => self.env = v.into(),
            "grid_width" => self.grid_width = parse(key, v)?,
            "grid_height" => self.grid_height = parse(key, v)?,
            "grid_step_limit" => self.grid_step_limit = parse(key, v)?,
            "episode_len" => self.episode_len = parse(key, v)?,
            "arm0_prob" => self.arm0_prob = parse(key, v)?,
            "eps" => {
                self.eps = v
                    .split(',')
                    .map(|x| parse(key, x.trim()))
                    .collect::<Result<Vec<f64>>>()?
            }
            "expert_ratio" => self.expert_ratio = parse(key, v)?,
            "mix" => self.mix = v.into(),
            "episodes" => self.episodes = parse(key, v)?,
            "dataset" => self.dataset = Some(PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            "checkpoint" => self.checkpoint = Some(PathBuf::from(v)),
            "seed" => self.seed = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "target_update_period" => self.target_update_period = parse(key, v)?,
            "lr" => {
                self.actor_lr = parse(key, v)?;
                self.critic_lr = self.actor_lr;
            }
            "actor_lr" => self.actor_lr = parse(key, v)?,
            "critic_lr" => self.critic_lr = parse(key, v)?,
            "n_updates" => self.n_updates = parse(key, v)?,
            "discount" => self.discount = parse(key, v)?,
            "filter" => self.filter = v.into(),
            "beta" => self.beta = parse(key, v)?,
            "clip" => self.clip = parse(key, v)?,
            "advantage" => self.advantage = v.into(),
            "adv_samples" => self.adv_samples = parse(key, v)?,
            "k" => self.k = parse(key, v)?,
            "critic_samples" => self.critic_samples = parse(key, v)?,
            "cwp_samples" => self.cwp_samples = parse(key, v)?,
            "cwp_beta" => self.cwp_beta = parse(key, v)?,
            "hidden_width" => self.hidden_width = parse(key, v)?,
            "n_blocks" => self.n_blocks = parse(key, v)?,
            "mog_components" => self.mog_components = parse(key, v)?,
            "n_atoms" => self.n_atoms = parse(key, v)?,
            "v_min" => self.v_min = parse(key, v)?,
            "v_max" => self.v_max = parse(key, v)?,
            "eval_episodes" => self.eval_episodes = parse(key, v)?,
            "eval_mode" => self.eval_mode = v.into(),
            "eval_every" => self.eval_every = parse(key, v)?,
            "cwp" => self.cwp = parse_bool(key, v)?,
            "deterministic_mode" => self.deterministic_mode = v.into(),
            "instances" => self.instances = parse(key, v)?,
            "iterations" => self.iterations = parse(key, v)?,
            "exp_epsilon" => self.exp_epsilon = parse(key, v)?,
            "trend_seeds" => self.trend_seeds = parse(key, v)?,
            "corrupt_update" => self.corrupt_update = parse_bool(key, v)?,
            other => return Err(Error::Config(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {pair:?}")))?;
        self.set(k, v)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            self.set_pair(line)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Every key with its current value, in the file format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let eps: Vec<String> = self.eps.iter().map(|e| e.to_string()).collect();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("env", self.env.clone());
        kv("grid_width", self.grid_width.to_string());
        kv("grid_height", self.grid_height.to_string());
        kv("grid_step_limit", self.grid_step_limit.to_string());
        kv("episode_len", self.episode_len.to_string());
        kv("arm0_prob", self.arm0_prob.to_string());
        kv("eps", eps.join(","));
        kv("expert_ratio", self.expert_ratio.to_string());
        kv("mix", self.mix.clone());
        kv("episodes", self.episodes.to_string());
        if let Some(p) = path(&self.dataset) {
            kv("dataset", p);
        }
        kv("out", self.out.display().to_string());
        if let Some(p) = path(&self.checkpoint) {
            kv("checkpoint", p);
        }
        kv("seed", self.seed.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("target_update_period", self.target_update_period.to_string());
        kv("actor_lr", self.actor_lr.to_string());
        kv("critic_lr", self.critic_lr.to_string());
        kv("n_updates", self.n_updates.to_string());
        kv("discount", self.discount.to_string());
        kv("filter", self.filter.clone());
        kv("beta", self.beta.to_string());
        kv("clip", self.clip.to_string());
        if !self.advantage.is_empty() {
            kv("advantage", self.advantage.clone());
        }
        kv("adv_samples", self.adv_samples.to_string());
        kv("k", self.k.to_string());
        kv("critic_samples", self.critic_samples.to_string());
        kv("cwp_samples", self.cwp_samples.to_string());
        kv("cwp_beta", self.cwp_beta.to_string());
        kv("hidden_width", self.hidden_width.to_string());
        kv("n_blocks", self.n_blocks.to_string());
        kv("mog_components", self.mog_components.to_string());
        kv("n_atoms", self.n_atoms.to_string());
        kv("v_min", self.v_min.to_string());
        kv("v_max", self.v_max.to_string());
        kv("eval_episodes", self.eval_episodes.to_string());
        kv("eval_mode", self.eval_mode.clone());
        kv("eval_every", self.eval_every.to_string());
        kv("cwp", self.cwp.to_string());
        kv("deterministic_mode", self.deterministic_mode.clone());
        kv("instances", self.instances.to_string());
        kv("iterations", self.iterations.to_string());
        kv("exp_epsilon", self.exp_epsilon.to_string());
        kv("trend_seeds", self.trend_seeds.to_string());
        kv("corrupt_update", self.corrupt_update.to_string());
        s
    }

    pub fn build_env(&self) -> Result<Env> {
        match self.env.as_str() {
            "bandit" => Ok(Env::Bandit(TwoArmedBandit::default())),
            "gridworld" => {
                let n = self.grid_width * self.grid_height;
                Ok(Env::GridWorld(GridWorld::new(
                    self.grid_width,
                    self.grid_height,
                    0,
                    n.saturating_sub(1),
                    self.grid_step_limit,
                )?))
            }
            "pointmass" => {
                if self.episode_len == 0 {
                    return Err(Error::Config("episode_len must be positive".into()));
                }
                Ok(Env::PointMass(PointMass1D {
                    episode_len: self.episode_len,
                    ..PointMass1D::default()
                }))
            }
            other => Err(Error::Config(format!(
                "unknown environment {other:?} (expected bandit, gridworld or pointmass)"
            ))),
        }
    }

    pub fn behavior(&self) -> Result<BehaviorSpec> {
        let spec = match self.env.as_str() {
            "bandit" => BehaviorSpec::BanditMixture { arm0_prob: self.arm0_prob },
            "gridworld" => BehaviorSpec::GridEpsilon { epsilons: self.eps.clone() },
            "pointmass" => BehaviorSpec::PointMassMixture {
                expert_ratio: self.expert_ratio,
                per_episode: match self.mix.as_str() {
                    "episode" => true,
                    "step" => false,
                    other => return Err(Error::Config(format!("mix must be episode or step, got {other:?}"))),
                },
            },
            _ => return Err(self.build_env().unwrap_err()),
        };
        spec.validate(&self.build_env()?)?;
        Ok(spec)
    }

    pub fn filter_spec(&self) -> Result<FilterSpec> {
        let f = match self.filter.as_str() {
            "bc" => FilterSpec::Bc,
            "binary" => FilterSpec::Binary,
            "binary_max" => FilterSpec::BinaryMax,
            "exp" => FilterSpec::Exp {
                beta: self.beta,
                clip: self.clip,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown filter {other:?} (expected bc, binary, binary_max or exp)"
                )))
            }
        };
        f.validate()?;
        Ok(f)
    }

    pub fn advantage_spec(&self) -> Result<AdvantageSpec> {
        let m = self.adv_samples;
        let kind = match self.advantage.as_str() {
            "" if self.filter == "binary_max" => "max",
            "" => "mean",
            other => other,
        };
        let a = match kind {
            "mean" => AdvantageSpec::Mean { m },
            "max" => AdvantageSpec::Max { m },
            "kstep" => AdvantageSpec::KStep { k: self.k, m },
            "mc" => AdvantageSpec::MonteCarlo { m },
            other => {
                return Err(Error::Config(format!(
                    "unknown advantage {other:?} (expected mean, max, kstep or mc)"
                )))
            }
        };
        a.validate()?;
        Ok(a)
    }

    pub fn learner(&self) -> Result<LearnerConfig> {
        let l = LearnerConfig {
            batch_size: self.batch_size,
            target_update_period: self.target_update_period,
            actor_lr: self.actor_lr,
            critic_lr: self.critic_lr,
            n_updates: self.n_updates,
            discount: self.discount,
            seed: self.seed,
            filter: self.filter_spec()?,
            advantage: self.advantage_spec()?,
            critic_samples: self.critic_samples,
            cwp_samples: self.cwp_samples,
            cwp_beta: self.cwp_beta,
            hidden_width: self.hidden_width,
            n_blocks: self.n_blocks,
            mog_components: self.mog_components,
            n_atoms: self.n_atoms,
            v_min: self.v_min,
            v_max: self.v_max,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn eval_mode(&self) -> Result<EvalMode> {
        EvalMode::parse(&self.eval_mode)
    }

    pub fn deterministic_mode(&self) -> Result<DeterministicMode> {
        match self.deterministic_mode.as_str() {
            "highest_weight" => Ok(DeterministicMode::HighestWeight),
            "sampled_component" => Ok(DeterministicMode::SampledComponent),
            other => Err(Error::Config(format!(
                "deterministic_mode must be highest_weight or sampled_component, got {other:?}"
            ))),
        }
    }

    /// Checks every derived setting used by training.
    pub fn validate_training(&self) -> Result<()> {
        self.build_env()?;
        self.learner()?;
        self.eval_mode()?;
        self.deterministic_mode()?;
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = ExperimentConfig::default();
        c.apply_text("# comment\nenv = gridworld\neps=0.0,0.5,1.0\n\nfilter = binary_max\n").unwrap();
        assert_eq!(c.eps, vec![0.0, 0.5, 1.0]);
        assert_eq!(c.advantage_spec().unwrap(), AdvantageSpec::Max { m: 4 });
        assert_eq!(ExperimentConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        let mut c = ExperimentConfig::default();
        assert!(c.set_pair("nope=1").is_err());
        assert!(c.set_pair("seed=abc").is_err());
        c.set_pair("filter=weird").unwrap();
        assert!(c.learner().is_err());
        c.set_pair("filter=exp").unwrap();
        c.set_pair("discount=1.0").unwrap();
        assert!(c.learner().is_err());
    }
}
