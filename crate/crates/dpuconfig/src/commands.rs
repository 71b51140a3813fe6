//! The subcommands as library functions. Each writes its outputs into a fresh
//! run directory and returns that directory plus a short text summary.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use dpuconfig_core::agent::{train, TrainSettings};
use dpuconfig_core::controller::{run_scenario, Arrival};
use dpuconfig_core::corpus::{generate_corpus, split_train_test, MeasurementTable, TrainTestSplit};
use dpuconfig_core::evaluator::{evaluate, oracle_best, AgentPolicy, BaselineKind, ConfigPolicy, OraclePolicy};
use dpuconfig_core::model::{reference_variants, WorkloadState};

use crate::checkpoint::{Checkpoint, CHECKPOINT_VERSION};
use crate::config::RunConfig;
use crate::error::{io_err, Error, Result};
use crate::{corpus_csv, manifest, report, timeline};

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub run_dir: PathBuf,
    pub summary: Vec<String>,
}

/// Measurement table from the configured CSV and manifest, or generated.
pub fn load_table(cfg: &RunConfig) -> Result<MeasurementTable> {
    let models = match &cfg.corpus.manifest {
        Some(p) => manifest::read_file(p)?,
        None => reference_variants(),
    };
    Ok(match &cfg.corpus.csv {
        Some(p) => MeasurementTable::new(models, corpus_csv::ingest_csv(p)?, cfg.calibration.clone())?,
        None => generate_corpus(&models, &cfg.calibration)?,
    })
}

fn names(models: &[dpuconfig_core::ModelProfile]) -> Vec<String> {
    models.iter().map(|m| m.name.clone()).collect()
}

/// `out_dir/<command>-<UTC timestamp>`, suffixed `-2`, `-3`, ... on collision.
pub fn create_run_dir(out_dir: &Path, command: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let base = format!("{command}-{stamp}");
    for n in 1.. {
        let dir = if n == 1 {
            out_dir.join(&base)
        } else {
            out_dir.join(format!("{base}-{n}"))
        };
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(io_err(&dir)(e)),
        }
    }
    unreachable!()
}

fn start_run(cfg: &RunConfig, command: &str) -> Result<PathBuf> {
    cfg.validate()?;
    let dir = create_run_dir(&cfg.out_dir, command)?;
    let path = dir.join("config.toml");
    std::fs::write(&path, cfg.to_toml()).map_err(io_err(&path))?;
    Ok(dir)
}

fn write_csv(path: &Path, body: impl FnOnce(BufWriter<File>) -> csv::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    body(BufWriter::new(file)).map_err(|e| Error::Parse {
        path: path.into(),
        message: e.to_string(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn cmd_generate_corpus(cfg: &RunConfig) -> Result<CommandOutput> {
    let dir = start_run(cfg, "corpus")?;
    let table = load_table(cfg)?;
    corpus_csv::write_file(&dir.join("corpus.csv"), table.records())?;
    manifest::write_file(&dir.join("manifest.toml"), table.models())?;
    Ok(CommandOutput {
        summary: vec![format!(
            "{} records for {} models written to {}",
            table.len(),
            table.models().len(),
            dir.display()
        )],
        run_dir: dir,
    })
}

fn split(table: &MeasurementTable) -> Result<TrainTestSplit> {
    Ok(split_train_test(table.models())?)
}

pub fn cmd_train(cfg: &RunConfig) -> Result<CommandOutput> {
    let dir = start_run(cfg, "train")?;
    let table = load_table(cfg)?;
    let split = split(&table)?;
    let train_models = names(&split.train);
    let settings = TrainSettings {
        episodes: cfg.train.episodes,
        fps_constraint: cfg.fps_constraint,
        seed: cfg.seed,
        hyper: cfg.ppo,
        reward: cfg.reward,
        normalization: cfg.normalization,
    };
    let out = train(&table, &train_models, &cfg.train.workloads, &settings)?;
    write_csv(&dir.join("train_log.csv"), |w| report::write_training_log(w, &out.log))?;
    let ckpt = Checkpoint {
        version: CHECKPOINT_VERSION,
        config: cfg.clone(),
        train_models: train_models.clone(),
        episodes: cfg.train.episodes,
        params: out.params,
        store: out.store,
    };
    ckpt.save(&dir.join("checkpoint.json"))?;
    let mut summary = vec![format!(
        "trained {} episodes on {} models ({} updates), held out {}",
        cfg.train.episodes,
        train_models.len(),
        out.log.len(),
        split.representatives.join(", ")
    )];
    if let Some(last) = out.log.last() {
        summary.push(format!(
            "last update: mean reward {:.4}, satisfaction {:.3}, entropy {:.4}",
            last.mean_reward, last.satisfaction, last.entropy
        ));
    }
    summary.push(format!("checkpoint: {}", dir.join("checkpoint.json").display()));
    Ok(CommandOutput { run_dir: dir, summary })
}

pub fn cmd_evaluate(cfg: &RunConfig, checkpoint: &Path) -> Result<CommandOutput> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let dir = start_run(cfg, "evaluate")?;
    let table = load_table(cfg)?;
    let test_models = names(&split(&table)?.test);
    let agent = AgentPolicy {
        params: &ckpt.params,
        normalization: ckpt.config.normalization,
    };
    let policies: [&dyn ConfigPolicy; 3] = [&agent, &BaselineKind::MaxFps, &BaselineKind::MinPower];
    let rep = evaluate(&policies, &table, &test_models, &cfg.evaluate.workloads, cfg.fps_constraint)?;
    write_csv(&dir.join("report.csv"), |w| report::write_evaluation_rows(w, &rep))?;
    write_csv(&dir.join("summary.csv"), |w| report::write_evaluation_summary(w, &rep))?;
    write_text(&dir.join("plot.json"), &report::evaluation_plot_json(&rep))?;
    let mut summary: Vec<String> = rep
        .per_workload
        .iter()
        .map(|s| {
            format!(
                "{:<10} {}  normalized PPW {:.4}  satisfaction {:.3}",
                s.policy, s.workload, s.mean_normalized_ppw, s.satisfaction_rate
            )
        })
        .collect();
    summary.push(format!("report: {}", dir.join("report.csv").display()));
    Ok(CommandOutput { run_dir: dir, summary })
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<CommandOutput> {
    let dir = start_run(cfg, "oracle")?;
    let table = load_table(cfg)?;
    let mut rows = Vec::new();
    for m in table.models() {
        for w in WorkloadState::ALL {
            rows.push((m.name.clone(), w, oracle_best(&table, &m.name, w, cfg.fps_constraint)?));
        }
    }
    write_csv(&dir.join("oracle.csv"), |w| report::write_oracle(w, &rows))?;
    let infeasible = rows.iter().filter(|r| !r.2.feasible).count();
    Ok(CommandOutput {
        summary: vec![format!(
            "{} oracle rows ({} with no feasible configuration) written to {}",
            rows.len(),
            infeasible,
            dir.join("oracle.csv").display()
        )],
        run_dir: dir,
    })
}

/// Cold start on InceptionV3, an identical follow-up, then a switch to
/// ResNeXt50, all under the compute-heavy workload.
pub fn default_scenario(fps_constraint: f64) -> Vec<Arrival> {
    [
        (0.0, "InceptionV3"),
        (60_000.0, "InceptionV3"),
        (120_000.0, "ResNeXt50_32x4d"),
    ]
    .into_iter()
    .map(|(t, m)| Arrival {
        time_ms: t,
        model: m.into(),
        workload: WorkloadState::C,
        fps_constraint,
    })
    .collect()
}

/// Plays the scenario with the checkpoint's agent, or the oracle without one.
pub fn cmd_timeline(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<CommandOutput> {
    let ckpt = checkpoint.map(Checkpoint::load).transpose()?;
    let dir = start_run(cfg, "timeline")?;
    let table = load_table(cfg)?;
    let arrivals = match &cfg.timeline.scenario {
        Some(p) => timeline::load_scenario(p)?,
        None => default_scenario(cfg.fps_constraint),
    };
    let agent = ckpt.as_ref().map(|c| AgentPolicy {
        params: &c.params,
        normalization: c.config.normalization,
    });
    let policy: &dyn ConfigPolicy = match &agent {
        Some(a) => a,
        None => &OraclePolicy,
    };
    let sc = run_scenario(&arrivals, policy, &table, &cfg.timeline.overheads, cfg.timeline.tail_ms)?;
    write_csv(&dir.join("timeline.csv"), |w| timeline::write_timeline(w, &sc))?;
    write_csv(&dir.join("decisions.csv"), |w| timeline::write_decisions(w, &sc))?;
    let summary_json = serde_json::to_string_pretty(&sc.summary).expect("summary serializes");
    write_text(&dir.join("summary.json"), &summary_json)?;
    write_text(&dir.join("plot.json"), &timeline::timeline_plot_json(&sc))?;
    let mut summary: Vec<String> = sc
        .decisions
        .iter()
        .map(|d| {
            format!(
                "t={:>9.0} ms  {:<18} {}  -> {:<9} overhead {:>5.0} ms  PPW {:.3} (oracle {:.3})",
                d.arrival.time_ms, d.arrival.model, d.arrival.workload, d.config.to_string(), d.overhead_ms, d.ppw, d.oracle_ppw
            )
        })
        .collect();
    summary.push(format!(
        "policy {}: {} reconfigurations, overhead {:.0} ms ({:.4}% of runtime)",
        policy.name(),
        sc.summary.reconfigurations,
        sc.summary.total_overhead_ms,
        100.0 * sc.summary.overhead_fraction
    ));
    Ok(CommandOutput { run_dir: dir, summary })
}
