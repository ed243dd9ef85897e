use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use crr_core::config::ExperimentConfig;
use crr_core::experiment::{
    bandit_report, bandit_report_csv, cmd_eval, cmd_generate, cmd_train, cmd_verify_tabular, eval_csv,
};

#[derive(Parser)]
#[command(name = "crr", version, about = "Offline RL with critic regularized regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collect a behavior dataset.
    Generate(Common),
    /// Train actor and critic on a dataset.
    Train(Common),
    /// Evaluate a checkpoint in every action-selection mode.
    Eval(Common),
    /// Check the tabular propositions on random MDPs; exits nonzero on failure.
    VerifyTabular(Common),
    /// Print the two-armed bandit analysis table.
    BanditReport(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid-world exploration rate(s), comma separated.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let shortcuts = [
            ("env", self.env.clone()),
            ("episodes", self.episodes.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("eps", self.eps.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("dataset", self.dataset.as_ref().map(|p| p.display().to_string())),
            ("instances", self.instances.map(|v| v.to_string())),
            ("checkpoint", self.checkpoint.as_ref().map(|p| p.display().to_string())),
        ];
        for (k, v) in shortcuts {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        for pair in &self.overrides {
            cfg.set_pair(pair).with_context(|| format!("--set {pair}"))?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(c) => {
            let cfg = c.load()?;
            let s = cmd_generate(&cfg)?;
            println!(
                "wrote {} episodes ({} transitions) to {}; mean behavior return {:.4}",
                s.episodes,
                s.transitions,
                s.path.display(),
                s.mean_return
            );
        }
        Command::Train(c) => {
            let cfg = c.load()?;
            let out = cmd_train(&cfg, &mut |m, evals| {
                if m.step % 1000 == 0 || !evals.is_empty() {
                    eprintln!(
                        "step {:>7} actor {:.4} critic {:.4} weight {:.3} accept {:.3}",
                        m.step, m.actor_loss, m.critic_loss, m.mean_weight, m.accept_frac
                    );
                    for e in evals {
                        eprintln!("  eval {:<13} {:.4} ± {:.4}", e.mode.name(), e.mean, e.std);
                    }
                }
            })?;
            println!(
                "trained {} steps; outputs in {}",
                out.metrics.len(),
                cfg.out.display()
            );
        }
        Command::Eval(c) => {
            let cfg = c.load()?;
            print!("{}", eval_csv(&cmd_eval(&cfg)?));
        }
        Command::VerifyTabular(c) => {
            let cfg = c.load()?;
            let o = cmd_verify_tabular(&cfg)?;
            let failed = o.rows.iter().filter(|r| !r.pass).count();
            println!(
                "{} proposition rows, {} failed; trend medians {:?} ({} inversions, shrink {:.4}) {}",
                o.rows.len(),
                failed,
                o.trend.medians,
                o.trend.inversions,
                o.trend.shrink,
                if o.trend.pass { "pass" } else { "FAIL" }
            );
            println!("report written to {}", cfg.out.join("propositions.csv").display());
            if !o.pass {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::BanditReport(c) => {
            let cfg = c.load()?;
            print!("{}", bandit_report_csv(&bandit_report(&cfg, 10_000)?));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
