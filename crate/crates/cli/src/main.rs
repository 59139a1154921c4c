//! `manitail`: train, evaluate, replay and export policies for the
//! quadruped with a manipulator tail.
//!
//! Failures print one line `error class=<class> exit=<code>: <message>` to
//! stderr. Exit codes: 0 ok, 2 config, 3 checkpoint, 4 runtime.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use manitail_tasks::checkpoint::Checkpoint;
use manitail_tasks::evaluate::{replay, run_protocol, Protocol};
use manitail_tasks::experiment::ExperimentConfig;
use manitail_tasks::trainer::train;
use manitail_tasks::RunError;

/// Exported policy format name.
const POLICY_FORMAT: &str = "manitail-policy";
const POLICY_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "manitail", version, about = "Train and evaluate a quadruped with a manipulator tail")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a policy; writes config.cfg, iterations.csv and checkpoint.json.
    Train {
        /// Experiment config file.
        #[arg(long)]
        config: PathBuf,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: the config's output_dir].
        #[arg(long)]
        output: Option<PathBuf>,
        /// Dotted config override, e.g. `training.iterations=10`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Print a progress line every N iterations (0 disables).
        #[arg(long, default_value_t = 10)]
        log_every: u64,
    },
    /// Run an evaluation protocol on a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// One of turning-speeds, drop-grid, random-drops, impulse-grid.
        #[arg(long)]
        protocol: Protocol,
        #[arg(long)]
        output: PathBuf,
    },
    /// Re-simulate one episode and write trace.csv.
    Replay {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Episode seed [default: the config's evaluation seed].
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: PathBuf,
        /// Config to compare with the checkpoint's; the checkpoint's is used.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write the actor and normalizer of a checkpoint as policy.json.
    ExportModel {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Load and validate a config file without running anything.
    ValidateConfig {
        config: PathBuf,
        /// Dotted config override. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn parse_override(item: &str) -> Result<(String, toml::Value), RunError> {
    let (key, raw) =
        item.split_once('=').ok_or_else(|| RunError::Config(format!("override `{item}` is not KEY=VALUE")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(RunError::Config(format!("override `{item}` has an empty key")));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

fn load_config(path: &Path, set: &[String], seed: Option<u64>) -> Result<ExperimentConfig, RunError> {
    let mut overrides = set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = seed {
        let seed = i64::try_from(seed).map_err(|_| RunError::Config("seed does not fit in a config integer".into()))?;
        overrides.push(("seed".into(), toml::Value::Integer(seed)));
    }
    Ok(ExperimentConfig::load(path, &overrides)?)
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Train { config, seed, output, set, log_every } => {
            let cfg = load_config(&config, &set, seed)?;
            let out = output.unwrap_or_else(|| cfg.output_dir.clone());
            let outcome = train(&cfg, &out, |r| {
                if log_every > 0 && r.iteration % log_every == 0 {
                    eprintln!(
                        "iteration {} mean_reward {:.4} mean_return {:.3} episodes {}",
                        r.iteration, r.collect.mean_reward, r.collect.mean_return, r.collect.episodes
                    );
                }
            })?;
            println!("checkpoint {}", outcome.checkpoint.display());
        }
        Command::Eval { checkpoint, protocol, output } => {
            let ck = Checkpoint::load(&checkpoint)?;
            run_protocol(protocol, &ck.config, &ck.model, &output)?;
            println!("summary {}", output.join("summary.json").display());
        }
        Command::Replay { checkpoint, seed, output, config } => {
            let ck = Checkpoint::load(&checkpoint)?;
            if let Some(path) = config {
                let given = load_config(&path, &[], None)?;
                if given != ck.config {
                    eprintln!("warning: {} differs from the checkpoint's config; using the checkpoint's", path.display());
                }
            }
            let seed = seed.unwrap_or(ck.config.evaluation.seed);
            if seed == ck.config.seed {
                eprintln!("warning: replay seed equals the training seed");
            }
            fs::create_dir_all(&output)?;
            let path = output.join("trace.csv");
            let result = replay(&ck.config, &ck.model, seed, &path)?;
            println!(
                "trace {} steps {} end {} return {:.4}",
                path.display(),
                result.steps,
                result.end_reason,
                result.episode_return
            );
        }
        Command::ExportModel { checkpoint, output } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let cfg = &ck.config;
            let policy = serde_json::json!({
                "format": POLICY_FORMAT,
                "version": POLICY_VERSION,
                "task": cfg.task.as_str(),
                "robot": cfg.robot.as_str(),
                "iteration": ck.iteration,
                "obs_dim": ck.model.obs_dim(),
                "action_dim": ck.model.action_dim(),
                "control_dt": cfg.env.control_dt,
                "action_scale": cfg.env.action_scale,
                "gains": cfg.env.gains,
                "normalizer": ck.model.normalizer,
                "actor": ck.model.actor,
            });
            fs::create_dir_all(&output)?;
            let path = output.join("policy.json");
            let text = serde_json::to_string(&policy).map_err(|e| RunError::Runtime(e.to_string()))?;
            fs::write(&path, text)?;
            println!("policy {}", path.display());
        }
        Command::ValidateConfig { config, set } => {
            let cfg = load_config(&config, &set, None)?;
            println!(
                "ok name={} task={} robot={} iterations={}",
                cfg.name,
                cfg.task.as_str(),
                cfg.robot,
                cfg.iterations()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&message).trim_start_matches("error: ");
            eprintln!("error class=usage exit=2: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let text = e.to_string().replace('\n', " ");
            let message = text.strip_prefix(&format!("{}: ", e.class())).unwrap_or(&text);
            eprintln!("error class={} exit={}: {message}", e.class(), e.exit_code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
