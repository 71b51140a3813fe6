//! Single-step episodic environment replaying a measurement table.

use serde::{Deserialize, Serialize};

use crate::arch::{action_space, DpuConfiguration, ACTION_COUNT};
use crate::corpus::{DynamicFeatures, MeasurementRecord, MeasurementTable, CPU_CORES, MEMORY_PORTS};
use crate::error::{Error, Result};
use crate::model::{ModelProfile, WorkloadState};
use crate::reward::{calculate_reward, ContextBaselineStore, RewardParams};

pub const STATE_DIM: usize = 22;

/// Slot indices into [`StateVector`].
pub mod slot {
    pub const CPU: usize = 0;
    pub const MEM_READ: usize = 4;
    pub const MEM_WRITE: usize = 9;
    pub const P_FPGA: usize = 14;
    pub const P_ARM: usize = 15;
    pub const GMAC: usize = 16;
    pub const LDFM: usize = 17;
    pub const LDWB: usize = 18;
    pub const STFM: usize = 19;
    pub const PARAMS: usize = 20;
    pub const C_PERF: usize = 21;
}

/// Normalized observation: CPU, read and write bandwidth, power, model
/// statics and the FPS constraint, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector(pub [f64; STATE_DIM]);

impl StateVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Fixed per-feature divisors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Normalization {
    /// MB/s.
    pub bandwidth: f64,
    /// W.
    pub power: f64,
    pub gmac: f64,
    /// Bytes.
    pub bytes: f64,
    pub params: f64,
    /// Frames/s.
    pub fps: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            bandwidth: 19_200.0,
            power: 30.0,
            gmac: 15.0,
            bytes: 200.0e6,
            params: 70.0e6,
            fps: 60.0,
        }
    }
}

pub fn encode_state(
    telemetry: &DynamicFeatures,
    model: &ModelProfile,
    fps_constraint: f64,
    norm: &Normalization,
) -> Result<StateVector> {
    let mut s = [0.0; STATE_DIM];
    s[slot::CPU..slot::CPU + CPU_CORES].copy_from_slice(&telemetry.cpu_util);
    for p in 0..MEMORY_PORTS {
        s[slot::MEM_READ + p] = telemetry.mem_read_bw[p] / norm.bandwidth;
        s[slot::MEM_WRITE + p] = telemetry.mem_write_bw[p] / norm.bandwidth;
    }
    s[slot::P_FPGA] = telemetry.p_fpga / norm.power;
    s[slot::P_ARM] = telemetry.p_arm / norm.power;
    s[slot::GMAC] = model.gmac / norm.gmac;
    s[slot::LDFM] = model.ldfm / norm.bytes;
    s[slot::LDWB] = model.ldwb / norm.bytes;
    s[slot::STFM] = model.stfm / norm.bytes;
    s[slot::PARAMS] = model.params / norm.params;
    s[slot::C_PERF] = fps_constraint / norm.fps;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("state"));
    }
    Ok(StateVector(s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub record: MeasurementRecord,
    pub ppw: f64,
    pub reward: f64,
}

#[derive(Debug, Clone)]
struct Episode<'t> {
    model: &'t ModelProfile,
    workload: WorkloadState,
    fps_constraint: f64,
}

/// Reset/step protocol over an immutable table. The baseline store is passed
/// to [`Environment::step`] so several environments can share one.
#[derive(Debug, Clone)]
pub struct Environment<'t> {
    table: &'t MeasurementTable,
    reward: RewardParams,
    norm: Normalization,
    current: Option<Episode<'t>>,
}

impl<'t> Environment<'t> {
    pub fn new(table: &'t MeasurementTable, reward: RewardParams, norm: Normalization) -> Self {
        Self {
            table,
            reward,
            norm,
            current: None,
        }
    }

    pub fn table(&self) -> &'t MeasurementTable {
        self.table
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    /// Pre-action state: idle telemetry under `workload` plus the model's statics.
    pub fn observe(&self, model: &ModelProfile, workload: WorkloadState, fps_constraint: f64) -> Result<StateVector> {
        let idle = DynamicFeatures::idle(self.table.params(), workload);
        encode_state(&idle, model, fps_constraint, &self.norm)
    }

    pub fn reset(&mut self, model: &str, workload: WorkloadState, fps_constraint: f64) -> Result<StateVector> {
        let profile = self
            .table
            .model(model)
            .ok_or_else(|| Error::UnknownModel(model.into()))?;
        let state = self.observe(profile, workload, fps_constraint)?;
        self.current = Some(Episode {
            model: profile,
            workload,
            fps_constraint,
        });
        Ok(state)
    }

    /// Applies action `index`; the episode always terminates.
    pub fn step(&mut self, index: usize, store: &mut ContextBaselineStore) -> Result<(EpisodeOutcome, bool)> {
        if index >= ACTION_COUNT {
            return Err(Error::ActionOutOfRange(index));
        }
        let ep = self.current.take().ok_or(Error::NotReset)?;
        let config: DpuConfiguration = action_space()[index];
        let record = self.table.get(&ep.model.name, &config, ep.workload)?;
        let reward = calculate_reward(record, ep.model, ep.fps_constraint, store, &self.reward)?;
        Ok((
            EpisodeOutcome {
                record: record.clone(),
                ppw: record.ppw(),
                reward,
            },
            true,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use crate::corpus::{generate_corpus, CalibrationParams};
    use crate::model::reference_models;

    fn table() -> MeasurementTable {
        let models: alloc::vec::Vec<_> = reference_models()
            .into_iter()
            .filter(|m| m.name == "MobileNetV2" || m.name == "ResNet152")
            .collect();
        generate_corpus(&models, &CalibrationParams::default()).unwrap()
    }

    fn zero_model() -> ModelProfile {
        let mut m = reference_models()[0].clone();
        m.gmac = 0.0;
        m.ldfm = 0.0;
        m.ldwb = 0.0;
        m.stfm = 0.0;
        m.params = 0.0;
        m
    }

    #[test]
    fn zero_inputs_encode_to_constraint_only() {
        let s = encode_state(&DynamicFeatures::zeroed(), &zero_model(), 30.0, &Normalization::default()).unwrap();
        for (i, v) in s.0.iter().enumerate() {
            if i == slot::C_PERF {
                assert_eq!(*v, 0.5);
            } else {
                assert_eq!(*v, 0.0, "slot {i}");
            }
        }
    }

    #[test]
    fn gmac_change_is_local() {
        let a = zero_model();
        let mut b = a.clone();
        b.gmac = 3.0;
        let t = DynamicFeatures::zeroed();
        let n = Normalization::default();
        let sa = encode_state(&t, &a, 30.0, &n).unwrap();
        let sb = encode_state(&t, &b, 30.0, &n).unwrap();
        let diff: alloc::vec::Vec<usize> = (0..STATE_DIM).filter(|&i| sa.0[i] != sb.0[i]).collect();
        assert_eq!(diff, [slot::GMAC]);
    }

    #[test]
    fn non_finite_rejected() {
        let mut t = DynamicFeatures::zeroed();
        t.p_arm = f64::NAN;
        assert_eq!(
            encode_state(&t, &zero_model(), 30.0, &Normalization::default()),
            Err(Error::NonFinite("state"))
        );
    }

    #[test]
    fn reference_states_are_well_scaled() {
        let table = table();
        let env = Environment::new(&table, RewardParams::default(), Normalization::default());
        for m in reference_models() {
            for w in WorkloadState::ALL {
                let s = env.observe(&m, w, 30.0).unwrap();
                assert!(s.0.iter().all(|v| (0.0..=1.5).contains(v)), "{} {w}: {:?}", m.name, s);
            }
        }
    }

    #[test]
    fn protocol_errors() {
        let table = table();
        let mut env = Environment::new(&table, RewardParams::default(), Normalization::default());
        let mut store = ContextBaselineStore::from_params(&RewardParams::default());
        assert_eq!(env.step(0, &mut store).unwrap_err(), Error::NotReset);
        assert_eq!(
            env.reset("AlexNet", WorkloadState::N, 30.0).unwrap_err(),
            Error::UnknownModel("AlexNet".into())
        );
        env.reset("MobileNetV2", WorkloadState::N, 30.0).unwrap();
        assert_eq!(env.step(26, &mut store).unwrap_err(), Error::ActionOutOfRange(26));
        let (out, done) = env.step(25, &mut store).unwrap();
        assert!(done);
        assert_eq!(out.record.config.to_string(), "B4096_3");
        assert_eq!(out.ppw, out.record.fps / out.record.p_fpga);
        assert_eq!(env.step(0, &mut store).unwrap_err(), Error::NotReset);
    }

    #[test]
    fn frozen_store_replays_identically() {
        let table = table();
        let mut env = Environment::new(&table, RewardParams::default(), Normalization::default());
        let mut store = ContextBaselineStore::from_params(&RewardParams::default());
        for a in 0..ACTION_COUNT {
            env.reset("ResNet152", WorkloadState::C, 30.0).unwrap();
            env.step(a, &mut store).unwrap();
        }
        let mut s1 = store.clone();
        let mut s2 = store.clone();
        env.reset("ResNet152", WorkloadState::M, 30.0).unwrap();
        let (o1, _) = env.step(7, &mut s1).unwrap();
        env.reset("ResNet152", WorkloadState::M, 30.0).unwrap();
        let (o2, _) = env.step(7, &mut s2).unwrap();
        assert_eq!(o1, o2);
    }
}
