//! Runtime decision loop: model arrivals, reuse-or-reconfigure decisions and
//! the resulting overhead timeline.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::arch::DpuConfiguration;
use crate::corpus::MeasurementTable;
use crate::error::{Error, Result};
use crate::evaluator::{oracle_best, ConfigPolicy};
use crate::model::WorkloadState;

/// Duration of each overhead phase, ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverheadProfile {
    pub telemetry_ms: f64,
    pub rl_inference_ms: f64,
    pub reconfigure_ms: f64,
    pub instruction_load_ms: f64,
}

impl Default for OverheadProfile {
    fn default() -> Self {
        Self {
            telemetry_ms: 88.0,
            rl_inference_ms: 20.0,
            reconfigure_ms: 384.0,
            instruction_load_ms: 507.0,
        }
    }
}

impl OverheadProfile {
    pub fn violations(&self) -> Vec<Error> {
        [
            ("telemetry_ms", self.telemetry_ms),
            ("rl_inference_ms", self.rl_inference_ms),
            ("reconfigure_ms", self.reconfigure_ms),
            ("instruction_load_ms", self.instruction_load_ms),
        ]
        .into_iter()
        .filter(|(_, v)| !(v.is_finite() && *v >= 0.0))
        .map(|(field, _)| Error::InvalidHyperparameter {
            field,
            reason: "must be a non-negative duration".into(),
        })
        .collect()
    }

    pub fn duration(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Telemetry => self.telemetry_ms,
            Phase::Decide => self.rl_inference_ms,
            Phase::Reconfigure => self.reconfigure_ms,
            Phase::LoadInstructions => self.instruction_load_ms,
            Phase::Inference => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Telemetry,
    Decide,
    Reconfigure,
    LoadInstructions,
    Inference,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Telemetry => "telemetry",
            Phase::Decide => "decide",
            Phase::Reconfigure => "reconfigure",
            Phase::LoadInstructions => "load_instructions",
            Phase::Inference => "inference",
        }
    }

    pub fn is_overhead(self) -> bool {
        self != Phase::Inference
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub start_ms: f64,
    pub duration_ms: f64,
    pub phase: Phase,
    pub detail: String,
}

/// What is currently loaded on the fabric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deployment {
    pub model: String,
    pub config: DpuConfiguration,
}

/// Overhead phases needed to go from `current` to running `model` on `chosen`.
pub fn decide_transition(current: Option<&Deployment>, model: &str, chosen: &DpuConfiguration) -> Vec<Phase> {
    let mut phases = alloc::vec![Phase::Telemetry, Phase::Decide];
    let reconfigure = current.is_none_or(|d| d.config != *chosen);
    let reload = current.is_none_or(|d| d.config != *chosen || d.model != model);
    if reconfigure {
        phases.push(Phase::Reconfigure);
    }
    if reload {
        phases.push(Phase::LoadInstructions);
    }
    phases
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub time_ms: f64,
    pub model: String,
    pub workload: WorkloadState,
    pub fps_constraint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub arrival: Arrival,
    pub config: DpuConfiguration,
    pub overhead_ms: f64,
    pub fps: f64,
    pub ppw: f64,
    pub oracle_ppw: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub arrivals: usize,
    pub reconfigurations: usize,
    pub total_overhead_ms: f64,
    pub total_inference_ms: f64,
    /// Overhead over overhead plus inference time.
    pub overhead_fraction: f64,
    pub mean_ppw: f64,
    pub mean_oracle_ppw: f64,
    pub mean_normalized_ppw: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub events: Vec<TimelineEvent>,
    pub decisions: Vec<Decision>,
    pub summary: ScenarioSummary,
}

/// Plays `arrivals` in order. Each arrival's phases start once both the
/// arrival time has come and the previous phases are done; its inference runs
/// until the next arrival is handled, or for `tail_ms` after the last one.
pub fn run_scenario(
    arrivals: &[Arrival],
    policy: &dyn ConfigPolicy,
    table: &MeasurementTable,
    overheads: &OverheadProfile,
    tail_ms: f64,
) -> Result<Scenario> {
    if let Some(e) = overheads.violations().into_iter().next() {
        return Err(e);
    }
    if arrivals.windows(2).any(|w| w[1].time_ms < w[0].time_ms) {
        return Err(Error::UnsortedArrivals);
    }
    let mut out = Scenario::default();
    let mut current: Option<Deployment> = None;
    let mut clock = 0.0f64;
    let mut pending_inference: Option<(f64, String)> = None;

    let close_inference = |events: &mut Vec<TimelineEvent>, start_end: Option<(f64, String)>, end: f64| {
        if let Some((start, detail)) = start_end {
            events.push(TimelineEvent {
                start_ms: start,
                duration_ms: end - start,
                phase: Phase::Inference,
                detail,
            });
        }
    };

    for arrival in arrivals {
        let model = table
            .model(&arrival.model)
            .ok_or_else(|| Error::UnknownModel(arrival.model.clone()))?;
        let start = clock.max(arrival.time_ms);
        close_inference(&mut out.events, pending_inference.take(), start);
        clock = start;

        let chosen = policy.select(table, model, arrival.workload, arrival.fps_constraint)?;
        let record = table.get(&model.name, &chosen, arrival.workload)?;
        let oracle = oracle_best(table, &model.name, arrival.workload, arrival.fps_constraint)?;
        let phases = decide_transition(current.as_ref(), &model.name, &chosen);
        let mut overhead = 0.0;
        for phase in phases {
            let d = overheads.duration(phase);
            let detail = match phase {
                Phase::Reconfigure => match &current {
                    Some(c) => format!("{} -> {}", c.config, chosen),
                    None => format!("load {chosen}"),
                },
                Phase::LoadInstructions => format!("{} on {}", model.name, chosen),
                Phase::Decide => format!("select {chosen}"),
                _ => format!("{} state {}", model.name, arrival.workload),
            };
            out.events.push(TimelineEvent {
                start_ms: clock,
                duration_ms: d,
                phase,
                detail,
            });
            if phase == Phase::Reconfigure {
                out.summary.reconfigurations += 1;
            }
            clock += d;
            overhead += d;
        }
        pending_inference = Some((
            clock,
            format!("{} on {}: {:.2} fps, {:.3} fps/W", model.name, chosen, record.fps, record.ppw()),
        ));
        current = Some(Deployment {
            model: model.name.clone(),
            config: chosen,
        });
        out.summary.total_overhead_ms += overhead;
        out.decisions.push(Decision {
            arrival: arrival.clone(),
            config: chosen,
            overhead_ms: overhead,
            fps: record.fps,
            ppw: record.ppw(),
            oracle_ppw: oracle.ppw,
        });
    }
    let end = clock + tail_ms.max(0.0);
    close_inference(&mut out.events, pending_inference.take(), end);

    let s = &mut out.summary;
    s.arrivals = out.decisions.len();
    s.total_inference_ms = out
        .events
        .iter()
        .filter(|e| e.phase == Phase::Inference)
        .map(|e| e.duration_ms)
        .sum();
    let busy = s.total_overhead_ms + s.total_inference_ms;
    s.overhead_fraction = if busy > 0.0 { s.total_overhead_ms / busy } else { 0.0 };
    if s.arrivals > 0 {
        let n = s.arrivals as f64;
        s.mean_ppw = out.decisions.iter().map(|d| d.ppw).sum::<f64>() / n;
        s.mean_oracle_ppw = out.decisions.iter().map(|d| d.oracle_ppw).sum::<f64>() / n;
        s.mean_normalized_ppw = out.decisions.iter().map(|d| d.ppw / d.oracle_ppw).sum::<f64>() / n;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::DpuArchitecture;
    use crate::corpus::{generate_corpus, CalibrationParams};
    use crate::evaluator::{FixedPolicy, OraclePolicy};
    use crate::model::reference_models;
    use alloc::vec;

    fn table() -> MeasurementTable {
        generate_corpus(&reference_models(), &CalibrationParams::default()).unwrap()
    }

    fn arrival(t: f64, model: &str) -> Arrival {
        Arrival {
            time_ms: t,
            model: model.into(),
            workload: WorkloadState::C,
            fps_constraint: 30.0,
        }
    }

    fn cfg(a: DpuArchitecture, n: u32) -> DpuConfiguration {
        DpuConfiguration::new(a, n)
    }

    #[test]
    fn transition_plans() {
        use Phase::*;
        let b4096 = cfg(DpuArchitecture::B4096, 1);
        let b2304 = cfg(DpuArchitecture::B2304, 2);
        assert_eq!(
            decide_transition(None, "m", &b4096),
            [Telemetry, Decide, Reconfigure, LoadInstructions]
        );
        let d = Deployment {
            model: "m".into(),
            config: b2304,
        };
        assert_eq!(decide_transition(Some(&d), "m", &b2304), [Telemetry, Decide]);
        assert_eq!(
            decide_transition(Some(&d), "m", &b4096),
            [Telemetry, Decide, Reconfigure, LoadInstructions]
        );
        assert_eq!(decide_transition(Some(&d), "other", &b2304), [Telemetry, Decide, LoadInstructions]);
        assert_eq!(
            decide_transition(Some(&d), "m", &cfg(DpuArchitecture::B2304, 3)),
            [Telemetry, Decide, Reconfigure, LoadInstructions]
        );
    }

    #[test]
    fn cold_start_and_reuse_costs() {
        let t = table();
        let s = run_scenario(
            &[arrival(0.0, "ResNet50"), arrival(10_000.0, "ResNet50")],
            &OraclePolicy,
            &t,
            &OverheadProfile::default(),
            5_000.0,
        )
        .unwrap();
        assert_eq!(s.decisions[0].overhead_ms, 999.0);
        assert_eq!(s.decisions[1].overhead_ms, 108.0);
        assert_eq!(s.summary.total_overhead_ms, 1107.0);
        let phase_sum: f64 = s.events.iter().filter(|e| e.phase.is_overhead()).map(|e| e.duration_ms).sum();
        assert_eq!(phase_sum, s.summary.total_overhead_ms);
        assert_eq!(s.summary.reconfigurations, 1);
        assert_eq!(s.summary.mean_normalized_ppw, 1.0);
    }

    #[test]
    fn events_are_chronological_and_disjoint() {
        let t = table();
        let arrivals = vec![
            arrival(0.0, "MobileNetV2"),
            arrival(500.0, "ResNet152"),
            arrival(20_000.0, "ResNet152"),
            arrival(20_000.0, "InceptionV4"),
        ];
        let s = run_scenario(&arrivals, &OraclePolicy, &t, &OverheadProfile::default(), 1_000.0).unwrap();
        for w in s.events.windows(2) {
            assert!(w[0].start_ms + w[0].duration_ms <= w[1].start_ms + 1e-9);
        }
        // The second arrival waits for the first cold start to finish.
        let second = s.events.iter().filter(|e| e.phase == Phase::Telemetry).nth(1).unwrap();
        assert_eq!(second.start_ms, 999.0);
    }

    #[test]
    fn empty_scenario() {
        let t = table();
        let s = run_scenario(&[], &OraclePolicy, &t, &OverheadProfile::default(), 1_000.0).unwrap();
        assert!(s.events.is_empty());
        assert_eq!(s.summary.total_overhead_ms, 0.0);
    }

    #[test]
    fn long_inference_dwarfs_cold_start() {
        let t = table();
        let fixed = FixedPolicy(cfg(DpuArchitecture::B1600, 2));
        let s = run_scenario(&[arrival(0.0, "ResNet18")], &fixed, &t, &OverheadProfile::default(), 60_000.0).unwrap();
        assert!(s.summary.overhead_fraction < 0.02);
    }

    #[test]
    fn unsorted_arrivals_rejected() {
        let t = table();
        let r = run_scenario(
            &[arrival(5.0, "ResNet18"), arrival(1.0, "ResNet18")],
            &OraclePolicy,
            &t,
            &OverheadProfile::default(),
            0.0,
        );
        assert_eq!(r.unwrap_err(), Error::UnsortedArrivals);
    }
}
