//! Exhaustive oracle, fixed-configuration baselines and the normalized-PPW
//! evaluation protocol.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::agent::{act_greedy, PolicyParameters};
use crate::arch::{action_space, DpuConfiguration};
use crate::corpus::{DynamicFeatures, MeasurementRecord, MeasurementTable};
use crate::env::{encode_state, Normalization};
use crate::error::{Error, Result};
use crate::model::{ModelProfile, WorkloadState};

/// Best configuration for one (model, workload) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleChoice {
    pub config: DpuConfiguration,
    pub fps: f64,
    pub ppw: f64,
    /// False when no configuration meets the constraint; `config` is then the
    /// highest-PPW configuration overall.
    pub feasible: bool,
}

/// Orders `a` before `b` when it has higher PPW, then fewer instances, then
/// the smaller architecture.
fn oracle_order(a: &MeasurementRecord, b: &MeasurementRecord) -> Ordering {
    b.ppw()
        .total_cmp(&a.ppw())
        .then(a.config.instances.cmp(&b.config.instances))
        .then(a.config.arch.cmp(&b.config.arch))
}

/// Oracle over an explicit set of records.
pub fn oracle_from_records<'r>(
    records: impl IntoIterator<Item = &'r MeasurementRecord> + Clone,
    fps_constraint: f64,
) -> Option<OracleChoice> {
    let pick = |feasible_only: bool| {
        records
            .clone()
            .into_iter()
            .filter(|r| !feasible_only || r.fps >= fps_constraint)
            .min_by(|a, b| oracle_order(a, b))
    };
    let (best, feasible) = match pick(true) {
        Some(r) => (r, true),
        None => (pick(false)?, false),
    };
    Some(OracleChoice {
        config: best.config,
        fps: best.fps,
        ppw: best.ppw(),
        feasible,
    })
}

pub fn oracle_best(
    table: &MeasurementTable,
    model: &str,
    workload: WorkloadState,
    fps_constraint: f64,
) -> Result<OracleChoice> {
    let records = table.action_records(model, workload)?;
    Ok(oracle_from_records(records.iter().copied(), fps_constraint).expect("action space is non-empty"))
}

/// Fixed extreme-point policies, applied without the FPS constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    MaxFps,
    MinPower,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::MaxFps => "max_fps",
            BaselineKind::MinPower => "min_power",
        }
    }
}

/// Argmax FPS or argmin FPGA power over the 26 records; lowest action index
/// on ties.
pub fn baseline_policy(
    table: &MeasurementTable,
    model: &str,
    workload: WorkloadState,
    kind: BaselineKind,
) -> Result<DpuConfiguration> {
    let records = table.action_records(model, workload)?;
    let score = |r: &MeasurementRecord| match kind {
        BaselineKind::MaxFps => r.fps,
        BaselineKind::MinPower => -r.p_fpga,
    };
    let mut best = 0;
    for (i, r) in records.iter().enumerate() {
        if score(r) > score(records[best]) {
            best = i;
        }
    }
    Ok(records[best].config)
}

/// Anything that picks a configuration for a model under a workload.
pub trait ConfigPolicy {
    fn name(&self) -> &str;

    fn select(
        &self,
        table: &MeasurementTable,
        model: &ModelProfile,
        workload: WorkloadState,
        fps_constraint: f64,
    ) -> Result<DpuConfiguration>;
}

/// Greedy action of a trained network on the pre-action state.
#[derive(Debug, Clone)]
pub struct AgentPolicy<'p> {
    pub params: &'p PolicyParameters,
    pub normalization: Normalization,
}

impl ConfigPolicy for AgentPolicy<'_> {
    fn name(&self) -> &str {
        "agent"
    }

    fn select(
        &self,
        table: &MeasurementTable,
        model: &ModelProfile,
        workload: WorkloadState,
        fps_constraint: f64,
    ) -> Result<DpuConfiguration> {
        let idle = DynamicFeatures::idle(table.params(), workload);
        let state = encode_state(&idle, model, fps_constraint, &self.normalization)?;
        Ok(action_space()[act_greedy(self.params, &state)?])
    }
}

impl ConfigPolicy for BaselineKind {
    fn name(&self) -> &str {
        BaselineKind::name(*self)
    }

    fn select(
        &self,
        table: &MeasurementTable,
        model: &ModelProfile,
        workload: WorkloadState,
        _fps_constraint: f64,
    ) -> Result<DpuConfiguration> {
        baseline_policy(table, &model.name, workload, *self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OraclePolicy;

impl ConfigPolicy for OraclePolicy {
    fn name(&self) -> &str {
        "oracle"
    }

    fn select(
        &self,
        table: &MeasurementTable,
        model: &ModelProfile,
        workload: WorkloadState,
        fps_constraint: f64,
    ) -> Result<DpuConfiguration> {
        Ok(oracle_best(table, &model.name, workload, fps_constraint)?.config)
    }
}

/// Always the same configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPolicy(pub DpuConfiguration);

impl ConfigPolicy for FixedPolicy {
    fn name(&self) -> &str {
        "fixed"
    }

    fn select(&self, _: &MeasurementTable, _: &ModelProfile, _: WorkloadState, _: f64) -> Result<DpuConfiguration> {
        Ok(self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub policy: String,
    pub model: String,
    pub workload: WorkloadState,
    pub chosen: DpuConfiguration,
    pub chosen_fps: f64,
    pub chosen_ppw: f64,
    pub oracle: DpuConfiguration,
    pub oracle_ppw: f64,
    pub oracle_feasible: bool,
    /// Chosen PPW over oracle PPW.
    pub normalized_ppw: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSummary {
    pub policy: String,
    pub workload: WorkloadState,
    pub rows: usize,
    pub mean_normalized_ppw: f64,
    pub satisfaction_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub rows: usize,
    pub mean_normalized_ppw: f64,
    pub satisfaction_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub fps_constraint: f64,
    pub rows: Vec<EvaluationRow>,
    pub per_workload: Vec<WorkloadSummary>,
    pub per_policy: Vec<PolicySummary>,
}

impl EvaluationReport {
    pub fn summary(&self, policy: &str, workload: WorkloadState) -> Option<&WorkloadSummary> {
        self.per_workload
            .iter()
            .find(|s| s.policy == policy && s.workload == workload)
    }

    pub fn policy_summary(&self, policy: &str) -> Option<&PolicySummary> {
        self.per_policy.iter().find(|s| s.policy == policy)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> (usize, f64) {
    let (n, sum) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n, if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Rows for each policy over `models × workloads` (models vary fastest),
/// with per-workload and per-policy aggregates.
pub fn evaluate(
    policies: &[&dyn ConfigPolicy],
    table: &MeasurementTable,
    models: &[String],
    workloads: &[WorkloadState],
    fps_constraint: f64,
) -> Result<EvaluationReport> {
    let mut rows = Vec::new();
    for policy in policies {
        for &w in workloads {
            for name in models {
                let model = table.model(name).ok_or_else(|| Error::UnknownModel(name.clone()))?;
                let oracle = oracle_best(table, name, w, fps_constraint)?;
                let chosen = policy.select(table, model, w, fps_constraint)?;
                let record = table.get(name, &chosen, w)?;
                rows.push(EvaluationRow {
                    policy: policy.name().into(),
                    model: name.clone(),
                    workload: w,
                    chosen,
                    chosen_fps: record.fps,
                    chosen_ppw: record.ppw(),
                    oracle: oracle.config,
                    oracle_ppw: oracle.ppw,
                    oracle_feasible: oracle.feasible,
                    normalized_ppw: record.ppw() / oracle.ppw,
                    satisfied: record.fps >= fps_constraint,
                });
            }
        }
    }

    let mut per_workload = Vec::new();
    let mut per_policy = Vec::new();
    for policy in policies {
        let of_policy = || rows.iter().filter(|r| r.policy == policy.name());
        for &w in workloads {
            let sel = || of_policy().filter(|r| r.workload == w);
            let (n, ppw) = mean(sel().map(|r| r.normalized_ppw));
            let (_, sat) = mean(sel().map(|r| if r.satisfied { 1.0 } else { 0.0 }));
            per_workload.push(WorkloadSummary {
                policy: policy.name().into(),
                workload: w,
                rows: n,
                mean_normalized_ppw: ppw,
                satisfaction_rate: sat,
            });
        }
        let (n, ppw) = mean(of_policy().map(|r| r.normalized_ppw));
        let (_, sat) = mean(of_policy().map(|r| if r.satisfied { 1.0 } else { 0.0 }));
        per_policy.push(PolicySummary {
            policy: policy.name().into(),
            rows: n,
            mean_normalized_ppw: ppw,
            satisfaction_rate: sat,
        });
    }
    Ok(EvaluationReport {
        fps_constraint,
        rows,
        per_workload,
        per_policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::DpuArchitecture;
    use crate::corpus::{generate_corpus, split_train_test, CalibrationParams};
    use crate::model::reference_variants;
    use alloc::string::ToString;
    use alloc::vec;

    fn default_table() -> MeasurementTable {
        generate_corpus(&reference_variants(), &CalibrationParams::default()).unwrap()
    }

    #[test]
    fn forced_choice_and_unconstrained() {
        let table = default_table();
        let recs = table.action_records("ResNet152", WorkloadState::M).unwrap();
        let fastest = recs.iter().map(|r| r.fps).fold(0.0, f64::max);
        let forced = oracle_best(&table, "ResNet152", WorkloadState::M, fastest).unwrap();
        assert!(forced.feasible);
        assert_eq!(forced.fps, fastest);
        let free = oracle_best(&table, "ResNet152", WorkloadState::M, 0.0).unwrap();
        let best = recs.iter().map(|r| r.ppw()).fold(0.0, f64::max);
        assert_eq!(free.ppw, best);
    }

    #[test]
    fn infeasible_is_flagged() {
        let table = default_table();
        let o = oracle_best(&table, "ResNet152", WorkloadState::N, 1e9).unwrap();
        assert!(!o.feasible);
        assert_eq!(o, oracle_best(&table, "ResNet152", WorkloadState::N, 0.0).unwrap().with_feasible(false));
    }

    impl OracleChoice {
        fn with_feasible(mut self, f: bool) -> Self {
            self.feasible = f;
            self
        }
    }

    #[test]
    fn ties_prefer_fewer_instances_then_smaller_arch() {
        let table = default_table();
        let mut recs: Vec<MeasurementRecord> = table
            .action_records("MobileNetV2", WorkloadState::N)
            .unwrap()
            .iter()
            .map(|r| (*r).clone())
            .collect();
        for r in &mut recs {
            r.fps = 100.0;
            r.p_fpga = 2.0;
        }
        let o = oracle_from_records(&recs, 30.0).unwrap();
        assert_eq!(o.config, DpuConfiguration::new(DpuArchitecture::B512, 1));
        // Equal PPW on B4096_1 and B512_4: fewer instances wins.
        for r in &mut recs {
            r.fps = if r.config.to_string() == "B4096_1" || r.config.to_string() == "B512_4" { 200.0 } else { 100.0 };
        }
        let o = oracle_from_records(&recs, 30.0).unwrap();
        assert_eq!(o.config.to_string(), "B4096_1");
    }

    #[test]
    fn oracle_scan_for_large_model_in_n() {
        let table = default_table();
        let o = oracle_best(&table, "ResNet152", WorkloadState::N, 30.0).unwrap();
        for r in table.action_records("ResNet152", WorkloadState::N).unwrap() {
            if r.fps >= 30.0 {
                assert!(r.ppw() <= o.ppw);
            }
        }
        assert!(o.feasible);
    }

    #[test]
    fn baselines_on_default_corpus() {
        let table = default_table();
        for m in table.models() {
            for w in WorkloadState::ALL {
                assert_eq!(
                    baseline_policy(&table, &m.name, w, BaselineKind::MinPower).unwrap().to_string(),
                    "B512_1"
                );
            }
        }
        let c = baseline_policy(&table, "ResNet152", WorkloadState::N, BaselineKind::MaxFps).unwrap();
        assert_eq!(c.arch, DpuArchitecture::B4096);
    }

    #[test]
    fn oracle_policy_scores_one() {
        let table = default_table();
        let split = split_train_test(table.models()).unwrap();
        let names: Vec<String> = split.test.iter().map(|m| m.name.clone()).collect();
        let report = evaluate(
            &[&OraclePolicy],
            &table,
            &names,
            &[WorkloadState::C, WorkloadState::M],
            30.0,
        )
        .unwrap();
        assert_eq!(report.rows.len(), 18);
        assert!(report.rows.iter().all(|r| r.normalized_ppw == 1.0));
        assert_eq!(report.summary("oracle", WorkloadState::C).unwrap().mean_normalized_ppw, 1.0);
    }

    #[test]
    fn satisfaction_rate_counts() {
        let table = default_table();
        let names = vec!["MobileNetV2".to_string(), "ResNet152".to_string(), "InceptionV4".to_string()];
        let fixed = FixedPolicy(DpuConfiguration::new(DpuArchitecture::B512, 1));
        let report = evaluate(&[&fixed], &table, &names, &[WorkloadState::N], 30.0).unwrap();
        let manual = report.rows.iter().filter(|r| r.chosen_fps >= 30.0).count() as f64 / 3.0;
        assert_eq!(report.policy_summary("fixed").unwrap().satisfaction_rate, manual);
        for r in &report.rows {
            if r.satisfied && r.oracle_feasible {
                assert!(r.normalized_ppw > 0.0 && r.normalized_ppw <= 1.0);
            }
        }
    }

    #[test]
    fn agent_policy_uses_greedy_action() {
        let table = default_table();
        let params = PolicyParameters::zeroed();
        let agent = AgentPolicy {
            params: &params,
            normalization: Normalization::default(),
        };
        let m = table.model("ResNet18").unwrap();
        assert_eq!(agent.select(&table, m, WorkloadState::C, 30.0).unwrap().to_string(), "B512_1");
    }
}
