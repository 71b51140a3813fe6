//! Run configuration: a single TOML file, with command-line overrides.

use std::path::{Path, PathBuf};

use dpuconfig_core::agent::PpoHyperparameters;
use dpuconfig_core::controller::OverheadProfile;
use dpuconfig_core::corpus::CalibrationParams;
use dpuconfig_core::env::Normalization;
use dpuconfig_core::model::WorkloadState;
use dpuconfig_core::reward::RewardParams;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSource {
    /// Measurement CSV; when absent the corpus is generated from `calibration`.
    pub csv: Option<PathBuf>,
    /// Model manifest; when absent the built-in 33-variant list is used.
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub episodes: u64,
    pub workloads: Vec<WorkloadState>,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            episodes: 200_000,
            workloads: WorkloadState::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub workloads: Vec<WorkloadState>,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self {
            workloads: vec![WorkloadState::C, WorkloadState::M],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimelineSection {
    /// Arrival list CSV (`time_ms,model,workload,fps_constraint`).
    pub scenario: Option<PathBuf>,
    /// Inference time after the last arrival, ms.
    pub tail_ms: f64,
    pub overheads: OverheadProfile,
}

impl Default for TimelineSection {
    fn default() -> Self {
        Self {
            scenario: None,
            tail_ms: 60_000.0,
            overheads: OverheadProfile::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Training seed.
    pub seed: u64,
    pub fps_constraint: f64,
    /// Parent of the timestamped run directories.
    pub out_dir: PathBuf,
    pub corpus: CorpusSource,
    pub calibration: CalibrationParams,
    pub reward: RewardParams,
    pub normalization: Normalization,
    pub ppo: PpoHyperparameters,
    pub train: TrainSection,
    pub evaluate: EvaluateSection,
    pub timeline: TimelineSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            fps_constraint: 30.0,
            out_dir: PathBuf::from("runs"),
            corpus: CorpusSource::default(),
            calibration: CalibrationParams::default(),
            reward: RewardParams::default(),
            normalization: Normalization::default(),
            ppo: PpoHyperparameters::default(),
            train: TrainSection::default(),
            evaluate: EvaluateSection::default(),
            timeline: TimelineSection::default(),
        }
    }
}

/// Values given on the command line; each replaces the file's field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub corpus_csv: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub corpus_seed: Option<u64>,
    pub episodes: Option<u64>,
    pub fps_constraint: Option<f64>,
    pub eval_workloads: Option<Vec<WorkloadState>>,
    pub scenario: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
        // Relative paths in a config file are relative to the file.
        if let Some(dir) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            };
            cfg.corpus.csv.as_mut().map(fix);
            cfg.corpus.manifest.as_mut().map(fix);
            cfg.timeline.scenario.as_mut().map(fix);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes to TOML")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.out_dir {
            self.out_dir = v.clone();
        }
        if let Some(v) = &o.corpus_csv {
            self.corpus.csv = Some(v.clone());
        }
        if let Some(v) = &o.manifest {
            self.corpus.manifest = Some(v.clone());
        }
        if let Some(v) = o.corpus_seed {
            self.calibration.rng_seed = v;
        }
        if let Some(v) = o.episodes {
            self.train.episodes = v;
        }
        if let Some(v) = o.fps_constraint {
            self.fps_constraint = v;
        }
        if let Some(v) = &o.eval_workloads {
            self.evaluate.workloads = v.clone();
        }
        if let Some(v) = &o.scenario {
            self.timeline.scenario = Some(v.clone());
        }
    }

    /// Every violated constraint, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let tagged = |section: &str, errs: Vec<dpuconfig_core::Error>| {
            errs.into_iter().map(move |e| format!("{section}: {e}")).collect::<Vec<_>>()
        };
        out.extend(tagged("calibration", self.calibration.violations()));
        out.extend(tagged("reward", self.reward.violations()));
        out.extend(tagged("ppo", self.ppo.violations()));
        out.extend(tagged("timeline.overheads", self.timeline.overheads.violations()));
        if !(self.fps_constraint.is_finite() && self.fps_constraint > 0.0) {
            out.push(format!("fps_constraint: must be positive, got {}", self.fps_constraint));
        }
        let n = &self.normalization;
        for (field, v) in [
            ("bandwidth", n.bandwidth),
            ("power", n.power),
            ("gmac", n.gmac),
            ("bytes", n.bytes),
            ("params", n.params),
            ("fps", n.fps),
        ] {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("normalization.{field}: must be positive, got {v}"));
            }
        }
        if self.train.workloads.is_empty() {
            out.push("train.workloads: must list at least one workload state".into());
        }
        if self.evaluate.workloads.is_empty() {
            out.push("evaluate.workloads: must list at least one workload state".into());
        }
        if !(self.timeline.tail_ms.is_finite() && self.timeline.tail_ms >= 0.0) {
            out.push(format!("timeline.tail_ms: must be non-negative, got {}", self.timeline.tail_ms));
        }
        for (field, p) in [
            ("corpus.csv", &self.corpus.csv),
            ("corpus.manifest", &self.corpus.manifest),
            ("timeline.scenario", &self.timeline.scenario),
        ] {
            if let Some(p) = p {
                if !p.is_file() {
                    out.push(format!("{field}: file `{}` not found", p.display()));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = RunConfig::default();
        assert!(cfg.violations().is_empty());
        let text = cfg.to_toml();
        assert_eq!(RunConfig::from_toml(&text, Path::new("run.toml")).unwrap(), cfg);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = RunConfig::from_toml("seed = 7\n[reward]\nlambda = 0.5\n", Path::new("run.toml")).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.reward.lambda, 0.5);
        assert_eq!(cfg.reward.alpha, 0.5);
        assert_eq!(cfg.ppo, PpoHyperparameters::default());
    }

    #[test]
    fn every_violation_is_listed() {
        let text = "fps_constraint = -1\n[reward]\nlambda = 2.0\nalpha = 0.0\n[ppo]\nclip_epsilon = 1.5\n[corpus]\ncsv = \"nope.csv\"\n";
        let cfg = RunConfig::from_toml(text, Path::new("/tmp/run.toml")).unwrap();
        let v = cfg.violations();
        assert_eq!(v.len(), 5, "{v:#?}");
        for needle in ["lambda", "alpha", "clip_epsilon", "fps_constraint", "nope.csv"] {
            assert!(v.iter().any(|m| m.contains(needle)), "{needle} missing from {v:#?}");
        }
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("lambda") && msg.contains("nope.csv"));
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(RunConfig::from_toml("sed = 1\n", Path::new("run.toml")).is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut cfg = RunConfig::from_toml("seed = 7\n[train]\nepisodes = 10\n", Path::new("run.toml")).unwrap();
        cfg.apply(&Overrides {
            seed: Some(9),
            episodes: Some(1000),
            ..Default::default()
        });
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.train.episodes, 1000);
    }

    #[test]
    fn relative_paths_resolve_against_file() {
        let cfg = RunConfig::from_toml("[corpus]\ncsv = \"data/c.csv\"\n", Path::new("/etc/exp/run.toml")).unwrap();
        assert_eq!(cfg.corpus.csv.unwrap(), PathBuf::from("/etc/exp/data/c.csv"));
    }
}
