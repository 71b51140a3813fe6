//! The measurement table replayed by the environment: a calibrated synthetic
//! generator plus the record type shared with ingested measurements.

mod sim;
mod split;

pub use sim::{
    arm_power, dpu_efficiency, fpga_power, latency_breakdown, simulate_latency, simulate_power,
    CalibrationParams, LatencyBreakdown, TelemetryProfile,
};
pub use split::{kmeans_1d, split_train_test, Clustering, TrainTestSplit};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::arch::{action_space, validate_configuration, DpuConfiguration, ACTION_COUNT};
use crate::error::{Error, Result};
use crate::model::{ModelProfile, WorkloadState};

pub const CPU_CORES: usize = 4;
pub const MEMORY_PORTS: usize = 5;

/// Runtime telemetry: the dynamic half of the agent's observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicFeatures {
    pub cpu_util: [f64; CPU_CORES],
    /// MB/s per port.
    pub mem_read_bw: [f64; MEMORY_PORTS],
    /// MB/s per port.
    pub mem_write_bw: [f64; MEMORY_PORTS],
    pub p_fpga: f64,
    pub p_arm: f64,
}

impl DynamicFeatures {
    pub fn zeroed() -> Self {
        Self {
            cpu_util: [0.0; CPU_CORES],
            mem_read_bw: [0.0; MEMORY_PORTS],
            mem_write_bw: [0.0; MEMORY_PORTS],
            p_fpga: 0.0,
            p_arm: 0.0,
        }
    }

    /// Telemetry of an idle DPU under the given background load.
    pub fn idle(params: &CalibrationParams, workload: WorkloadState) -> Self {
        let t = params.telemetry.get(workload);
        Self {
            cpu_util: [t.cpu_util; CPU_CORES],
            mem_read_bw: [t.mem_read_mbps; MEMORY_PORTS],
            mem_write_bw: [t.mem_write_mbps; MEMORY_PORTS],
            p_fpga: params.p_static,
            p_arm: params.p_arm_base.get(workload),
        }
    }

    pub fn mean_cpu_util(&self) -> f64 {
        self.cpu_util.iter().sum::<f64>() / CPU_CORES as f64
    }

    /// Sum of read and write bandwidth over all ports, MB/s.
    pub fn total_bandwidth(&self) -> f64 {
        self.mem_read_bw.iter().chain(&self.mem_write_bw).sum()
    }
}

/// Outcome of running one model on one configuration under one workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// Variant name; refers to a [`ModelProfile`] of the owning table.
    pub model: String,
    pub pruning_ratio: f64,
    pub config: DpuConfiguration,
    pub workload: WorkloadState,
    /// Aggregate frames/s over all instances.
    pub fps: f64,
    pub p_fpga: f64,
    pub p_arm: f64,
    pub cpu_util: [f64; CPU_CORES],
    pub mem_read_bw: [f64; MEMORY_PORTS],
    pub mem_write_bw: [f64; MEMORY_PORTS],
}

impl MeasurementRecord {
    pub fn validate(&self) -> Result<()> {
        let fail = |what: String| Err(Error::InvalidRecord(what));
        if !validate_configuration(&self.config) {
            return fail(format!("configuration {} exceeds the instance limit", self.config));
        }
        for (name, v) in [("fps", self.fps), ("p_fpga_w", self.p_fpga), ("p_arm_w", self.p_arm)] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.pruning_ratio.is_finite() && (0.0..1.0).contains(&self.pruning_ratio)) {
            return fail(format!("pruning_ratio {} outside [0, 1)", self.pruning_ratio));
        }
        if let Some(u) = self.cpu_util.iter().find(|u| !(0.0..=1.0).contains(*u)) {
            return fail(format!("cpu utilization {u} outside [0, 1]"));
        }
        if let Some(b) = self
            .mem_read_bw
            .iter()
            .chain(&self.mem_write_bw)
            .find(|b| !(b.is_finite() && **b >= 0.0))
        {
            return fail(format!("memory bandwidth {b} is negative or non-finite"));
        }
        Ok(())
    }

    /// Performance per watt: fps over FPGA power.
    pub fn ppw(&self) -> f64 {
        self.fps / self.p_fpga
    }

    pub fn dynamic_features(&self) -> DynamicFeatures {
        DynamicFeatures {
            cpu_util: self.cpu_util,
            mem_read_bw: self.mem_read_bw,
            mem_write_bw: self.mem_write_bw,
            p_fpga: self.p_fpga,
            p_arm: self.p_arm,
        }
    }
}

/// Records indexed by (model, configuration, workload), together with the
/// model profiles they refer to and the calibration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementTable {
    models: Vec<ModelProfile>,
    records: Vec<MeasurementRecord>,
    params: CalibrationParams,
    model_index: BTreeMap<String, usize>,
    index: BTreeMap<(usize, DpuConfiguration, WorkloadState), usize>,
}

impl MeasurementTable {
    /// Builds the lookup index. Every record must reference a known model
    /// and no (model, configuration, workload) key may repeat.
    pub fn new(models: Vec<ModelProfile>, records: Vec<MeasurementRecord>, params: CalibrationParams) -> Result<Self> {
        let mut model_index = BTreeMap::new();
        for (i, m) in models.iter().enumerate() {
            m.validate()?;
            if model_index.insert(m.name.clone(), i).is_some() {
                return Err(Error::InvalidModel {
                    model: m.name.clone(),
                    reason: "duplicate model name".into(),
                });
            }
        }
        let mut index = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            r.validate()
                .map_err(|e| Error::InvalidRecord(format!("record {i}: {e}")))?;
            let m = *model_index
                .get(&r.model)
                .ok_or_else(|| Error::UnknownModel(r.model.clone()))?;
            if index.insert((m, r.config, r.workload), i).is_some() {
                return Err(Error::InvalidRecord(format!(
                    "record {i}: duplicate entry for {} {} {}",
                    r.model, r.config, r.workload
                )));
            }
        }
        Ok(Self {
            models,
            records,
            params,
            model_index,
            index,
        })
    }

    pub fn models(&self) -> &[ModelProfile] {
        &self.models
    }

    pub fn records(&self) -> &[MeasurementRecord] {
        &self.records
    }

    pub fn params(&self) -> &CalibrationParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn model(&self, name: &str) -> Option<&ModelProfile> {
        self.model_index.get(name).map(|&i| &self.models[i])
    }

    pub fn lookup(&self, model: &str, config: &DpuConfiguration, workload: WorkloadState) -> Option<&MeasurementRecord> {
        let m = *self.model_index.get(model)?;
        self.index.get(&(m, *config, workload)).map(|&i| &self.records[i])
    }

    pub fn get(&self, model: &str, config: &DpuConfiguration, workload: WorkloadState) -> Result<&MeasurementRecord> {
        self.lookup(model, config, workload).ok_or_else(|| Error::MissingRecord {
            model: model.into(),
            config: *config,
            workload,
        })
    }

    /// The 26 action-space records of one (model, workload), in action order.
    pub fn action_records(&self, model: &str, workload: WorkloadState) -> Result<[&MeasurementRecord; ACTION_COUNT]> {
        let space = action_space();
        let first = self.get(model, &space[0], workload)?;
        let mut out = [first; ACTION_COUNT];
        for (slot, config) in out.iter_mut().zip(space.iter()).skip(1) {
            *slot = self.get(model, config, workload)?;
        }
        Ok(out)
    }
}

fn noisy(rng: &mut ChaCha8Rng, mean: f64, rel_sigma: f64) -> f64 {
    let sigma = (mean * rel_sigma).abs();
    if sigma == 0.0 {
        return mean;
    }
    // sigma is finite and positive here
    Normal::new(mean, sigma).map(|d| d.sample(rng)).unwrap_or(mean)
}

/// Simulates one record. `index` selects the record's noise stream.
pub fn simulate_record(
    model: &ModelProfile,
    config: &DpuConfiguration,
    workload: WorkloadState,
    params: &CalibrationParams,
    index: u64,
) -> Result<MeasurementRecord> {
    let latency = latency_breakdown(model, config, workload, params)?;
    let fps = f64::from(config.instances) / latency.latency_s;
    let p_fpga = fpga_power(params, config.arch, config.instances, latency.activity());
    let p_arm = arm_power(params, workload, fps);

    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed.wrapping_add(index));
    let profile = params.telemetry.get(workload);
    let sigma = params.telemetry_noise;
    let mut cpu_util = [0.0; CPU_CORES];
    for u in &mut cpu_util {
        *u = noisy(&mut rng, profile.cpu_util, sigma).clamp(0.0, 1.0);
    }
    let mut mem_read_bw = [0.0; MEMORY_PORTS];
    for b in &mut mem_read_bw {
        *b = noisy(&mut rng, profile.mem_read_mbps, sigma).max(0.0);
    }
    let mut mem_write_bw = [0.0; MEMORY_PORTS];
    for b in &mut mem_write_bw {
        *b = noisy(&mut rng, profile.mem_write_mbps, sigma).max(0.0);
    }
    Ok(MeasurementRecord {
        model: model.name.clone(),
        pruning_ratio: model.pruning_ratio,
        config: *config,
        workload,
        fps,
        p_fpga,
        p_arm,
        cpu_util,
        mem_read_bw,
        mem_write_bw,
    })
}

/// One record per (model, action, workload), ordered model-major, then
/// workload, then action. Deterministic in `params.rng_seed`.
pub fn generate_corpus(models: &[ModelProfile], params: &CalibrationParams) -> Result<MeasurementTable> {
    if models.is_empty() {
        return Err(Error::EmptyModelList);
    }
    params.validate()?;
    let mut records = Vec::with_capacity(models.len() * WorkloadState::ALL.len() * ACTION_COUNT);
    for model in models {
        model.validate()?;
        for workload in WorkloadState::ALL {
            for config in action_space() {
                let index = records.len() as u64;
                records.push(simulate_record(model, config, workload, params, index)?);
            }
        }
    }
    MeasurementTable::new(models.to_vec(), records, params.clone())
}
