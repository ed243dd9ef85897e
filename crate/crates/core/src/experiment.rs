//! The commands behind the `crr` binary, usable as a library so tests can
//! drive them without a subprocess.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::crr::{
    cwp_select, evaluate, filter_weight, ActionValueTable, Agent, EvalMode, FilterSpec, FixedCategorical, Learner,
    LearnerState, StepMetrics,
};
use crate::data::{read_dataset, write_dataset, Dataset};
use crate::envs::{generate_dataset, TwoArmedBandit};
use crate::error::{Error, Result};
use crate::nn::{checkpoint, Layout};
use crate::rng::Streams;
use crate::tabular::{
    build_empirical_mdp, io::format_report, run_sweep, tabular_crr, trend_experiment, CrrVariant, SweepOptions, SweepRow,
    TabularTransition, TrendResult,
};

pub const METRICS_HEADER: &str = "step,actor_loss,critic_loss,mean_weight,accept_frac,eval_return_mean,eval_return_std";
pub const EVAL_HEADER: &str = "step,mode,return_mean,return_std";
pub const TREND_SIZES: [usize; 4] = [100, 1_000, 10_000, 100_000];

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSummary {
    pub path: PathBuf,
    pub episodes: usize,
    pub transitions: usize,
    pub mean_return: f64,
}

/// Behavior data for the configured environment, drawn from the `data`
/// substream of the root seed.
pub fn generate(cfg: &ExperimentConfig) -> Result<Dataset> {
    let env = cfg.build_env()?;
    let behavior = cfg.behavior()?;
    generate_dataset(&env, &behavior, cfg.episodes, &Streams::new(cfg.seed).child("data", 0))
}

pub fn dataset_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.dataset.clone().unwrap_or_else(|| cfg.out.join("dataset.csv"))
}

pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<GenerateSummary> {
    let dataset = generate(cfg)?;
    let path = dataset_path(cfg);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write_dataset(&path, &dataset)?;
    let returns = dataset.episode_returns();
    let mean_return = if returns.is_empty() {
        0.0
    } else {
        returns.iter().sum::<f64>() / returns.len() as f64
    };
    Ok(GenerateSummary {
        path,
        episodes: returns.len(),
        transitions: dataset.len(),
        mean_return,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRow {
    pub step: u64,
    pub mode: EvalMode,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
}

/// Evaluates the given parameters in every mode. All modes share the
/// stream family `("eval", step)`, so episode `i` starts from the same state
/// in each mode.
pub fn evaluate_modes(
    cfg: &ExperimentConfig,
    learner: &Learner,
    actor: &[f64],
    critic: &[f64],
    step: u64,
) -> Result<Vec<EvalRow>> {
    let env = cfg.build_env()?;
    let streams = Streams::new(cfg.seed).child("eval", step);
    let det = cfg.deterministic_mode()?;
    let mut rows = Vec::new();
    for mode in EvalMode::ALL {
        if mode == EvalMode::Cwp && !cfg.cwp {
            continue;
        }
        let agent = Agent {
            actor: learner.actor.bind(actor),
            critic: learner.critic.bind(critic),
            mode,
            deterministic_mode: det,
            cwp_samples: learner.config.cwp_samples,
            cwp_beta: learner.config.cwp_beta,
        };
        let r = evaluate(&env, &agent, cfg.eval_episodes, &streams)?;
        rows.push(EvalRow {
            step,
            mode,
            mean: r.mean_return(),
            std: r.std_return(),
            stderr: r.standard_error(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub learner: Learner,
    pub initial: LearnerState,
    pub state: LearnerState,
    pub metrics: Vec<StepMetrics>,
    pub evals: Vec<EvalRow>,
}

impl TrainOutput {
    pub fn final_eval(&self, mode: EvalMode) -> Option<&EvalRow> {
        self.evals.iter().rev().find(|r| r.mode == mode)
    }
}

/// Runs `n_updates` learner steps with periodic evaluation (every
/// `eval_every` steps and after the last step).
pub fn train(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    progress: &mut dyn FnMut(&StepMetrics, &[EvalRow]),
) -> Result<TrainOutput> {
    cfg.validate_training()?;
    let env = cfg.build_env()?;
    if env.obs_dim() != dataset.obs_dim() || env.action_space() != dataset.action_space() {
        return Err(Error::Validation(format!(
            "dataset does not match the {} environment",
            env.name()
        )));
    }
    let learner = Learner::new(cfg.learner()?, dataset.obs_dim(), dataset.action_space())?;
    if cfg.n_updates > 0 {
        learner.check_dataset(dataset)?;
    }
    let initial = learner.init_state();
    let mut state = initial.clone();
    let mut metrics = Vec::with_capacity(cfg.n_updates as usize);
    let mut evals = Vec::new();
    for _ in 0..cfg.n_updates {
        let m = learner.step(&mut state, dataset)?;
        let mut new_evals = Vec::new();
        if (cfg.eval_every > 0 && m.step % cfg.eval_every == 0) || m.step == cfg.n_updates {
            new_evals = evaluate_modes(cfg, &learner, &state.actor, &state.critic, m.step)?;
        }
        progress(&m, &new_evals);
        evals.extend(new_evals);
        metrics.push(m);
    }
    Ok(TrainOutput {
        learner,
        initial,
        state,
        metrics,
        evals,
    })
}

pub fn metrics_csv(metrics: &[StepMetrics], evals: &[EvalRow], mode: EvalMode) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in metrics {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            m.step, m.actor_loss, m.critic_loss, m.mean_weight, m.accept_frac
        );
        match evals.iter().find(|e| e.step == m.step && e.mode == mode) {
            Some(e) => {
                let _ = writeln!(out, ",{},{}", e.mean, e.std);
            }
            None => out.push_str(",,\n"),
        }
    }
    out
}

pub fn eval_csv(evals: &[EvalRow]) -> String {
    let mut out = String::from(EVAL_HEADER);
    out.push('\n');
    for e in evals {
        let _ = writeln!(out, "{},{},{},{}", e.step, e.mode.name(), e.mean, e.std);
    }
    out
}

/// Actor and critic parameters in one checkpoint, prefixed `actor/` and
/// `critic/`.
pub fn save_checkpoint(path: &Path, learner: &Learner, actor: &[f64], critic: &[f64]) -> Result<()> {
    let (layout, values) = checkpoint_contents(learner, actor, critic)?;
    checkpoint::save(path, &layout, &values)
}

fn checkpoint_contents(learner: &Learner, actor: &[f64], critic: &[f64]) -> Result<(Layout, Vec<f64>)> {
    let mut entries = learner.actor.mlp.layout().prefixed("actor/", 0);
    entries.extend(learner.critic.mlp.layout().prefixed("critic/", actor.len()));
    let layout = Layout::from_entries(entries, actor.len() + critic.len())?;
    let mut values = actor.to_vec();
    values.extend_from_slice(critic);
    Ok((layout, values))
}

/// Loads actor and critic parameters, checking the manifest against the
/// learner's architecture.
pub fn load_checkpoint(path: &Path, learner: &Learner) -> Result<(Vec<f64>, Vec<f64>)> {
    let (layout, values) = checkpoint::load(path)?;
    let n_actor = learner.actor.n_params();
    let expected = checkpoint_contents(learner, &vec![0.0; n_actor], &vec![0.0; learner.critic.n_params()])?.0;
    if layout != expected {
        return Err(Error::Validation(format!(
            "checkpoint {} does not match the configured networks and environment",
            path.display()
        )));
    }
    let critic = values[n_actor..].to_vec();
    let mut actor = values;
    actor.truncate(n_actor);
    Ok((actor, critic))
}

pub fn cmd_train(
    cfg: &ExperimentConfig,
    progress: &mut dyn FnMut(&StepMetrics, &[EvalRow]),
) -> Result<TrainOutput> {
    cfg.validate_training()?;
    let path = dataset_path(cfg);
    if !path.exists() {
        return Err(Error::Config(format!("dataset {} does not exist", path.display())));
    }
    let dataset = read_dataset(&path)?;
    let out = train(cfg, &dataset, progress)?;
    ensure_dir(&cfg.out)?;
    let mode = cfg.eval_mode()?;
    write(&cfg.out.join("metrics.csv"), &metrics_csv(&out.metrics, &out.evals, mode))?;
    write(&cfg.out.join("eval.csv"), &eval_csv(&out.evals))?;
    write(&cfg.out.join("config.txt"), &cfg.to_text())?;
    save_checkpoint(&cfg.out.join("checkpoint.bin"), &out.learner, &out.state.actor, &out.state.critic)?;
    Ok(out)
}

pub fn cmd_eval(cfg: &ExperimentConfig) -> Result<Vec<EvalRow>> {
    cfg.validate_training()?;
    let env = cfg.build_env()?;
    let path = cfg
        .checkpoint
        .clone()
        .unwrap_or_else(|| cfg.out.join("checkpoint.bin"));
    let learner = Learner::new(cfg.learner()?, env.obs_dim(), env.action_space())?;
    let (actor, critic) = load_checkpoint(&path, &learner)?;
    evaluate_modes(cfg, &learner, &actor, &critic, 0)
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub rows: Vec<SweepRow>,
    pub trend: TrendResult,
    pub pass: bool,
}

pub fn trend_csv(trend: &TrendResult) -> String {
    let mut out = String::from("size,median_gap,seed_gaps\n");
    for (i, size) in trend.sizes.iter().enumerate() {
        let gaps: Vec<String> = trend.gaps.iter().map(|g| g[i].to_string()).collect();
        let _ = writeln!(out, "{},{},{}", size, trend.medians[i], gaps.join(";"));
    }
    out
}

/// Proposition sweep plus the sample-size trend; `pass` is the conjunction
/// of every row and the trend.
pub fn verify_tabular(cfg: &ExperimentConfig) -> Result<VerifyOutcome> {
    let opts = SweepOptions {
        seed: cfg.seed,
        instances: cfg.instances,
        iterations: cfg.iterations,
        exp_epsilon: cfg.exp_epsilon,
        corrupt: cfg.corrupt_update,
        ..SweepOptions::default()
    };
    let rows = run_sweep(&opts)?;
    let trend = trend_experiment(cfg.seed, cfg.trend_seeds, &TREND_SIZES)?;
    let pass = rows.iter().all(|r| r.pass) && trend.pass;
    Ok(VerifyOutcome { rows, trend, pass })
}

pub fn cmd_verify_tabular(cfg: &ExperimentConfig) -> Result<VerifyOutcome> {
    let outcome = verify_tabular(cfg)?;
    ensure_dir(&cfg.out)?;
    write(&cfg.out.join("propositions.csv"), &format_report(&outcome.rows))?;
    write(&cfg.out.join("trend.csv"), &trend_csv(&outcome.trend))?;
    Ok(outcome)
}

/// One method's arm probabilities in the bandit analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditRow {
    pub method: &'static str,
    pub beta: f64,
    pub probs: [f64; 2],
}

impl BanditRow {
    /// Arm 2 is the more likely arm.
    pub fn prefers_arm2(&self) -> bool {
        self.probs[1] > self.probs[0]
    }

    /// Arm 2 gained probability relative to the behavior policy.
    pub fn shifts_to_arm2(&self, mu_b: [f64; 2]) -> bool {
        self.probs[1] > mu_b[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditReport {
    pub mu_b: [f64; 2],
    pub q: [f64; 2],
    pub v: f64,
    pub rows: Vec<BanditRow>,
}

pub const BANDIT_BETAS: [f64; 3] = [0.1, 1.0, 10.0];

fn normalize(w: [f64; 2]) -> [f64; 2] {
    let z = w[0] + w[1];
    [w[0] / z, w[1] / z]
}

/// Exact analysis of the two-armed bandit under the behavior mixture
/// `(arm0_prob, 1 - arm0_prob)`.
///
/// The fitted policies are the closed-form maximizers of the weighted
/// log-likelihood over the behavior distribution, `π(a) ∝ E_B[w | a] μ_B(a)`.
/// The exp filter weighs an arm by its exact advantage; the return-weighted
/// variant weighs each observed payoff `R` by `exp((R - V)/β)`. CWP
/// frequencies are Monte-Carlo estimates over `trials` draws with the exact
/// critic.
pub fn bandit_report(cfg: &ExperimentConfig, trials: usize) -> Result<BanditReport> {
    let bandit = TwoArmedBandit::default();
    let p0 = cfg.arm0_prob;
    if !(0.0 < p0 && p0 < 1.0) {
        return Err(Error::Config("arm0_prob must lie strictly between 0 and 1".into()));
    }
    let mu_b = [p0, 1.0 - p0];
    let q = bandit.expected_payoffs();
    let v = mu_b[0] * q[0] + mu_b[1] * q[1];
    let clip = cfg.clip;

    // Tabular CRR on an empirical MDP whose action frequencies and mean
    // payoffs equal the exact ones.
    let n0 = (p0 * 3000.0).round() as usize;
    let mut data = vec![TabularTransition::new(0, 0, bandit.arm0_success, 1, true); n0];
    data.extend(vec![TabularTransition::new(0, 1, bandit.arm1_payoff, 1, true); 3000 - n0]);
    let emp = build_empirical_mdp(&data, 2, 2, 0.9)?;
    let binary = tabular_crr(&emp, CrrVariant::Binary, 1)?;
    let crr_binary = [binary[1].0.prob(0, 0), binary[1].0.prob(0, 1)];

    let mut rows = Vec::new();
    let streams = Streams::new(cfg.seed).child("bandit", 0);
    for (bi, &beta) in BANDIT_BETAS.iter().enumerate() {
        rows.push(BanditRow {
            method: "bc",
            beta,
            probs: mu_b,
        });
        rows.push(BanditRow {
            method: "crr_binary",
            beta,
            probs: crr_binary,
        });
        let exp = FilterSpec::Exp { beta, clip };
        rows.push(BanditRow {
            method: "exp_filter",
            beta,
            probs: normalize([
                mu_b[0] * filter_weight(&exp, q[0] - v),
                mu_b[1] * filter_weight(&exp, q[1] - v),
            ]),
        });
        let s = bandit.arm0_success;
        rows.push(BanditRow {
            method: "return_weighted",
            beta,
            probs: normalize([
                mu_b[0] * (s * filter_weight(&exp, 1.0 - v) + (1.0 - s) * filter_weight(&exp, 0.0 - v)),
                mu_b[1] * filter_weight(&exp, bandit.arm1_payoff - v),
            ]),
        });
        let pi = FixedCategorical(mu_b.to_vec());
        let critic = ActionValueTable(q.to_vec());
        let mut rng = streams.stream("cwp", bi as u64);
        let mut counts = [0usize; 2];
        for _ in 0..trials {
            let a = cwp_select(&pi, &critic, &[1.0], cfg.cwp_samples, beta, &mut rng)?;
            counts[a[0] as usize] += 1;
        }
        rows.push(BanditRow {
            method: "cwp",
            beta,
            probs: [counts[0] as f64 / trials as f64, counts[1] as f64 / trials as f64],
        });
    }
    Ok(BanditReport { mu_b, q, v, rows })
}

pub fn bandit_report_csv(report: &BanditReport) -> String {
    let mut out = format!(
        "# mu_b = ({}, {}); Q = ({}, {}); V = {}\nmethod,beta,p_arm1,p_arm2,prefers_arm2,shifts_to_arm2\n",
        report.mu_b[0], report.mu_b[1], report.q[0], report.q[1], report.v
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{},{}",
            r.method,
            r.beta,
            r.probs[0],
            r.probs[1],
            r.prefers_arm2(),
            r.shifts_to_arm2(report.mu_b)
        );
    }
    out
}
