//! Evaluation, oracle and training-log outputs.

use std::collections::BTreeMap;
use std::io::Write;

use dpuconfig_core::agent::UpdateLog;
use dpuconfig_core::evaluator::{EvaluationReport, OracleChoice};
use dpuconfig_core::model::WorkloadState;
use serde::Serialize;

fn finish<W: Write>(w: csv::Writer<W>) -> csv::Result<()> {
    w.into_inner().map_err(|e| e.into_error())?.flush()?;
    Ok(())
}

pub fn write_evaluation_rows<W: Write>(out: W, report: &EvaluationReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "policy",
        "model",
        "workload",
        "chosen",
        "chosen_fps",
        "chosen_ppw",
        "oracle",
        "oracle_ppw",
        "oracle_feasible",
        "normalized_ppw",
        "satisfied",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.policy.clone(),
            r.model.clone(),
            r.workload.to_string(),
            r.chosen.to_string(),
            r.chosen_fps.to_string(),
            r.chosen_ppw.to_string(),
            r.oracle.to_string(),
            r.oracle_ppw.to_string(),
            r.oracle_feasible.to_string(),
            r.normalized_ppw.to_string(),
            r.satisfied.to_string(),
        ])?;
    }
    finish(w)
}

pub fn write_evaluation_summary<W: Write>(out: W, report: &EvaluationReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "workload", "rows", "mean_normalized_ppw", "satisfaction_rate"])?;
    for s in &report.per_workload {
        w.write_record([
            s.policy.clone(),
            s.workload.to_string(),
            s.rows.to_string(),
            s.mean_normalized_ppw.to_string(),
            s.satisfaction_rate.to_string(),
        ])?;
    }
    for s in &report.per_policy {
        w.write_record([
            s.policy.clone(),
            "all".into(),
            s.rows.to_string(),
            s.mean_normalized_ppw.to_string(),
            s.satisfaction_rate.to_string(),
        ])?;
    }
    finish(w)
}

#[derive(Debug, Serialize)]
struct PlotGroup {
    workload: WorkloadState,
    models: Vec<String>,
    /// Policy name to one normalized PPW per model, in `models` order.
    series: BTreeMap<String, Vec<f64>>,
}

/// Per-model normalized PPW grouped by workload, one series per policy plus
/// the oracle's constant 1.
pub fn evaluation_plot_json(report: &EvaluationReport) -> String {
    let mut groups: Vec<PlotGroup> = Vec::new();
    for r in &report.rows {
        let g = match groups.iter_mut().position(|g| g.workload == r.workload) {
            Some(i) => &mut groups[i],
            None => {
                groups.push(PlotGroup {
                    workload: r.workload,
                    models: Vec::new(),
                    series: BTreeMap::new(),
                });
                groups.last_mut().unwrap()
            }
        };
        if !g.models.contains(&r.model) {
            g.models.push(r.model.clone());
            g.series.entry("oracle".into()).or_default().push(1.0);
        }
        g.series.entry(r.policy.clone()).or_default().push(r.normalized_ppw);
    }
    serde_json::to_string_pretty(&serde_json::json!({
        "fps_constraint": report.fps_constraint,
        "metric": "normalized_ppw",
        "groups": groups,
    }))
    .expect("plot data serializes")
}

pub fn write_oracle<W: Write>(out: W, rows: &[(String, WorkloadState, OracleChoice)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "workload", "arch", "instances", "fps", "ppw", "feasible"])?;
    for (model, workload, o) in rows {
        w.write_record([
            model.clone(),
            workload.to_string(),
            o.config.arch.name().to_string(),
            o.config.instances.to_string(),
            o.fps.to_string(),
            o.ppw.to_string(),
            o.feasible.to_string(),
        ])?;
    }
    finish(w)
}

pub fn write_training_log<W: Write>(out: W, log: &[UpdateLog]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "update",
        "episodes",
        "mean_reward",
        "mean_ppw",
        "satisfaction",
        "policy_loss",
        "value_loss",
        "entropy",
        "clip_fraction",
    ])?;
    for l in log {
        w.write_record([
            l.update.to_string(),
            l.episodes.to_string(),
            l.mean_reward.to_string(),
            l.mean_ppw.to_string(),
            l.satisfaction.to_string(),
            l.policy_loss.to_string(),
            l.value_loss.to_string(),
            l.entropy.to_string(),
            l.clip_fraction.to_string(),
        ])?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dpuconfig_core::corpus::{generate_corpus, CalibrationParams};
    use dpuconfig_core::evaluator::{evaluate, BaselineKind, OraclePolicy};
    use dpuconfig_core::model::reference_models;

    #[test]
    fn plot_groups_by_workload() {
        let models: Vec<_> = reference_models().into_iter().take(3).collect();
        let names: Vec<String> = models.iter().map(|m| m.name.clone()).collect();
        let table = generate_corpus(&models, &CalibrationParams::default()).unwrap();
        let report = evaluate(
            &[&OraclePolicy, &BaselineKind::MaxFps],
            &table,
            &names,
            &[WorkloadState::C, WorkloadState::M],
            30.0,
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&evaluation_plot_json(&report)).unwrap();
        let groups = v["groups"].as_array().unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0]["workload"], "C");
        assert_eq!(groups[0]["models"].as_array().unwrap().len(), 3);
        assert_eq!(groups[1]["series"]["max_fps"].as_array().unwrap().len(), 3);

        let mut buf = Vec::new();
        write_evaluation_rows(&mut buf, &report).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 12);
    }
}
