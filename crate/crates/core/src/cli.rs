//! Command-line front end. Each subcommand is one pipeline phase or one
//! experiment; all randomness comes from `--seed` through named streams.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;

use crate::config::ExperimentConfig;
use crate::distill::{collect_replay, distill, epoch_sweep, finetune, DistillConfig};
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::eval::{comparison_report, evaluate, ScoreCell, ScoreColumn};
use crate::nn::{ActorCriticNet, CapacityTier, Tier};
use crate::persistence::{
    check_fits, eval_csv, learning_curve_csv, load_checkpoint, load_replay, loss_curve_csv,
    read_eval_csv, save_checkpoint, save_replay, sweep_csv, write_text, EvalRow, Provenance,
};
use crate::rng;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "distillery", version, about = "Train PPO teachers and distill them into smaller students")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a teacher with PPO; writes teacher.ckpt and learning_curve.csv.
    TrainTeacher {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (defaults to `output_dir` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Record the teacher's observations and action probabilities.
    Collect {
        #[arg(long)]
        teacher: PathBuf,
        #[arg(long, default_value_t = 50_000)]
        records: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a fresh student to a replay buffer; also writes `<out>.loss.csv`.
    Distill {
        #[arg(long)]
        buffer: PathBuf,
        #[arg(long)]
        tier: Tier,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Optional config for widths and `distill.*` settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Continue training a student with PPO; also writes `<out>.curve.csv`.
    Finetune {
        #[arg(long)]
        student: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        steps: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint and write an evaluation CSV.
    Evaluate {
        #[arg(long)]
        policy: PathBuf,
        /// Environment and default budget; without it the checkpoint's
        /// environment is used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Agent name in the CSV (defaults to the checkpoint file stem).
        #[arg(long)]
        agent: Option<String>,
    },
    /// Distill and evaluate a fresh student for every (tier, epochs) pair.
    SweepEpochs {
        #[arg(long)]
        buffer: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        tiers: Vec<Tier>,
        #[arg(long, value_delimiter = ',', required = true)]
        epochs: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        eval_steps: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare evaluation CSVs with geometric-mean percentage rows.
    Report {
        /// `name=path.csv`, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        columns: Vec<String>,
        #[arg(long)]
        teacher: String,
        #[arg(long)]
        baseline: Option<String>,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("DISTILLERY_LOG", "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => EXIT_USAGE,
        Error::Config(_) | Error::Domain(_) | Error::Unsupported(_) => EXIT_CONFIG,
        Error::Numeric(_) => EXIT_NUMERIC,
        Error::Io { .. } | Error::Format { .. } => EXIT_IO,
    }
}

/// Seconds for replay metadata: `SOURCE_DATE_EPOCH` when set, else 0, so
/// that reruns produce identical files.
fn collection_timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::TrainTeacher { config, seed, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = out.or_else(|| cfg.output_dir.clone()).ok_or_else(|| {
                Error::Usage("train-teacher needs --out or output_dir in the config".into())
            })?;
            let seed = seed.unwrap_or(cfg.seed);
            let hash = cfg.hash();
            info!("training {} teacher on {} (config {hash})", cfg.tier, cfg.env.label());
            let outcome = crate::ppo::train(
                &cfg.env,
                &cfg.capacity(cfg.tier),
                &cfg.ppo,
                rng::derive_seed(seed, "teacher"),
            )?;
            create_dir(&out)?;
            let provenance = Provenance {
                algorithm: "ppo".into(),
                env: cfg.env.clone(),
                seed,
                env_steps: outcome.env_steps,
                config_hash: hash.clone(),
            };
            save_checkpoint(&outcome.net, &provenance, &out.join("teacher.ckpt"))?;
            write_text(&out.join("learning_curve.csv"), &learning_curve_csv(&outcome.curve, &hash))?;
            write_text(&out.join("config.txt"), &cfg.canonical())?;
            if let Some(last) = outcome.curve.last() {
                println!(
                    "teacher: {} env steps, trailing mean return {}",
                    outcome.env_steps, last.mean_return
                );
            }
            Ok(())
        }
        Command::Collect {
            teacher,
            records,
            seed,
            out,
        } => {
            let (net, prov) = load_checkpoint(&teacher)?;
            check_fits(&net, &prov.env)?;
            let teacher_id = format!("{}:{}:{}", prov.algorithm, prov.config_hash, prov.seed);
            let mut buffer = collect_replay(
                &net,
                &prov.env,
                records,
                rng::derive_seed(seed, "collection"),
                &teacher_id,
                collection_timestamp(),
            )?;
            buffer.metadata.config_hash = prov.config_hash;
            save_replay(&buffer, &out)?;
            println!("collected {} records from {}", buffer.len(), prov.env.label());
            Ok(())
        }
        Command::Distill {
            buffer,
            tier,
            epochs,
            seed,
            out,
            config,
        } => {
            let buf = load_replay(&buffer)?;
            let (capacity, mut dcfg, hash) = match config {
                Some(path) => {
                    let cfg = ExperimentConfig::load(&path)?;
                    (cfg.capacity(tier), cfg.distill.clone(), cfg.hash())
                }
                None => (
                    CapacityTier::default_for(tier),
                    DistillConfig::default(),
                    buf.metadata.config_hash.clone(),
                ),
            };
            if let Some(e) = epochs {
                dcfg.epochs = e;
            }
            let seed = rng::derive_seed(seed, "distill");
            let topology = capacity.topology(buf.obs_dim, buf.action_count);
            let mut student = ActorCriticNet::init(topology, &mut rng::stream(seed, "init", 0))?;
            let losses = distill(&mut student, &buf, &dcfg, seed)?;
            let provenance = Provenance {
                algorithm: "distill".into(),
                env: buf.metadata.env.clone(),
                seed,
                env_steps: 0,
                config_hash: hash.clone(),
            };
            save_checkpoint(&student, &provenance, &out)?;
            write_text(&with_suffix(&out, ".loss.csv"), &loss_curve_csv(&losses, &hash))?;
            println!(
                "distilled {tier} student for {} epochs, final loss {}",
                dcfg.epochs,
                losses.last().expect("epochs >= 1")
            );
            Ok(())
        }
        Command::Finetune {
            student,
            config,
            steps,
            seed,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let seed = seed.unwrap_or(cfg.seed);
            let (net, _) = load_checkpoint(&student)?;
            check_fits(&net, &cfg.env)?;
            let ppo = crate::ppo::PpoConfig {
                total_env_steps: steps,
                ..cfg.ppo.clone()
            };
            let hash = cfg.hash();
            let outcome = finetune(net, &cfg.env, &ppo, rng::derive_seed(seed, "finetune"))?;
            let provenance = Provenance {
                algorithm: "finetune".into(),
                env: cfg.env.clone(),
                seed,
                env_steps: outcome.env_steps,
                config_hash: hash.clone(),
            };
            save_checkpoint(&outcome.net, &provenance, &out)?;
            write_text(&with_suffix(&out, ".curve.csv"), &learning_curve_csv(&outcome.curve, &hash))?;
            println!("fine-tuned for {} env steps", outcome.env_steps);
            Ok(())
        }
        Command::Evaluate {
            policy,
            config,
            steps,
            seed,
            out,
            agent,
        } => {
            let (net, prov) = load_checkpoint(&policy)?;
            let (env, default_steps, default_seed, hash) = match config {
                Some(path) => {
                    let cfg = ExperimentConfig::load(&path)?;
                    let hash = cfg.hash();
                    (cfg.env, cfg.eval_steps, cfg.seed, hash)
                }
                None => (prov.env.clone(), 50_000, 0, prov.config_hash.clone()),
            };
            check_fits(&net, &env)?;
            let steps = steps.unwrap_or(default_steps);
            let seed = seed.unwrap_or(default_seed);
            let report = evaluate(&net, &env, steps, rng::derive_seed(seed, "eval"))?;
            let agent = agent.unwrap_or_else(|| {
                policy
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "agent".into())
            });
            let row = EvalRow::from_report(&env.label(), &agent, &report);
            write_text(&out, &eval_csv(&[row], &hash))?;
            println!(
                "{agent} on {}: mean {} std {} high {} over {} episodes",
                env.label(),
                report.mean,
                report.std,
                report.high,
                report.episodes
            );
            Ok(())
        }
        Command::SweepEpochs {
            buffer,
            tiers,
            epochs,
            seed,
            out,
            eval_steps,
            config,
        } => {
            let buf = load_replay(&buffer)?;
            let cfg = config.as_deref().map(ExperimentConfig::load).transpose()?;
            let capacities: Vec<CapacityTier> = tiers
                .iter()
                .map(|&t| match &cfg {
                    Some(c) => c.capacity(t),
                    None => CapacityTier::default_for(t),
                })
                .collect();
            let dcfg = cfg.as_ref().map(|c| c.distill.clone()).unwrap_or_default();
            let steps = eval_steps
                .or(cfg.as_ref().map(|c| c.eval_steps))
                .unwrap_or(50_000);
            let hash = cfg
                .as_ref()
                .map(ExperimentConfig::hash)
                .unwrap_or_else(|| buf.metadata.config_hash.clone());
            let env: EnvSpec = buf.metadata.env.clone();
            let rows = epoch_sweep(&capacities, &epochs, &buf, &env, &dcfg, steps, seed)?;
            write_text(&out, &sweep_csv(&rows, &hash))?;
            for r in &rows {
                println!(
                    "{:>6} {:>5} epochs: mean {:.4} ± {:.4} (se)",
                    r.tier.tier.as_str(),
                    r.epochs,
                    r.report.mean,
                    r.report.standard_error()
                );
            }
            Ok(())
        }
        Command::Report {
            columns,
            teacher,
            baseline,
            out,
        } => {
            let mut cols = Vec::new();
            for spec in &columns {
                let (name, path) = spec
                    .split_once('=')
                    .ok_or_else(|| Error::Usage(format!("column {spec:?} is not name=path")))?;
                let rows = read_eval_csv(Path::new(path))?;
                cols.push(ScoreColumn {
                    name: name.to_string(),
                    cells: rows
                        .into_iter()
                        .map(|r| {
                            (
                                r.env,
                                ScoreCell {
                                    mean: r.mean,
                                    std: r.std,
                                    high: r.high,
                                },
                            )
                        })
                        .collect(),
                });
            }
            let table = comparison_report(cols, &teacher, baseline.as_deref())?;
            print!("{}", table.render_text());
            if let Some(out) = out {
                write_text(&out, &table.render_csv())?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(run(["distillery", "no-such-command"]), EXIT_USAGE);
        assert_eq!(run(["distillery", "collect", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["distillery", "--help"]), EXIT_OK);
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Numeric("x".into())), EXIT_NUMERIC);
        assert_eq!(
            run(["distillery", "collect", "--teacher", "/nonexistent/t.ckpt", "--out", "/tmp/x"]),
            EXIT_IO
        );
    }

    #[test]
    fn suffixes() {
        assert_eq!(with_suffix(Path::new("a/student.ckpt"), ".loss.csv"), PathBuf::from("a/student.loss.csv"));
    }
}
