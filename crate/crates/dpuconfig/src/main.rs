use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dpuconfig::commands;
use dpuconfig::{Overrides, RunConfig};
use dpuconfig_core::model::WorkloadState;

#[derive(Parser)]
#[command(name = "dpuconfig", version, about = "Runtime DPU configuration selection with PPO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Parent directory for run outputs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Measurement CSV to use instead of the generated corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Model manifest (TOML).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Seed for corpus generation noise.
    #[arg(long)]
    corpus_seed: Option<u64>,
    /// FPS constraint.
    #[arg(long)]
    fps: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the measurement corpus and model manifest.
    GenerateCorpus(Common),
    /// Train the agent and write a checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        episodes: Option<u64>,
    },
    /// Evaluate a checkpoint against the oracle and baselines on the test models.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated workload states, e.g. `C,M`.
        #[arg(long, value_delimiter = ',')]
        workloads: Option<Vec<WorkloadState>>,
    },
    /// Write the oracle choice for every model and workload state.
    Oracle(Common),
    /// Simulate controller decisions and overheads over an arrival scenario.
    Timeline {
        #[command(flatten)]
        common: Common,
        /// Agent checkpoint; the oracle decides when omitted.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Arrival CSV (`time_ms,model,workload,fps_constraint`).
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

fn resolve(common: &Common, extra: Overrides) -> dpuconfig::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: common.seed,
        out_dir: common.out.clone(),
        corpus_csv: common.corpus.clone(),
        manifest: common.manifest.clone(),
        corpus_seed: common.corpus_seed,
        fps_constraint: common.fps,
        ..extra
    });
    Ok(cfg)
}

fn run(cli: Cli) -> dpuconfig::Result<commands::CommandOutput> {
    match cli.command {
        Command::GenerateCorpus(c) => commands::cmd_generate_corpus(&resolve(&c, Overrides::default())?),
        Command::Train { common, episodes } => commands::cmd_train(&resolve(
            &common,
            Overrides {
                episodes,
                ..Default::default()
            },
        )?),
        Command::Evaluate {
            common,
            checkpoint,
            workloads,
        } => commands::cmd_evaluate(
            &resolve(
                &common,
                Overrides {
                    eval_workloads: workloads,
                    ..Default::default()
                },
            )?,
            &checkpoint,
        ),
        Command::Oracle(c) => commands::cmd_oracle(&resolve(&c, Overrides::default())?),
        Command::Timeline {
            common,
            checkpoint,
            scenario,
        } => commands::cmd_timeline(
            &resolve(
                &common,
                Overrides {
                    scenario,
                    ..Default::default()
                },
            )?,
            checkpoint.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            for line in out.summary {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
