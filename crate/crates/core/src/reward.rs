//! Context-aware reward: FPS gating, PPW against a blended per-context
//! baseline, and tanh squashing.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::MeasurementRecord;
use crate::error::{Error, Result};
use crate::model::ModelProfile;

/// Reward returned when the FPS constraint is violated.
pub const VIOLATION_REWARD: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardParams {
    /// Weight of the global mean in the blended baseline.
    pub lambda: f64,
    /// Scale inside the tanh.
    pub alpha: f64,
    pub cpu_bin_width: f64,
    pub mem_bin_width: f64,
    /// Lower and upper GMAC edges of the middle bin.
    pub gmac_edges: [f64; 2],
    /// Lower and upper edges (MB) of the middle data-volume bin.
    pub data_edges_mb: [f64; 2],
    /// Bandwidth (MB/s) against which memory utilization is measured.
    pub max_bandwidth_mbps: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            lambda: 0.3,
            alpha: 0.5,
            cpu_bin_width: 0.25,
            mem_bin_width: 0.25,
            gmac_edges: [2.0, 8.0],
            data_edges_mb: [20.0, 80.0],
            max_bandwidth_mbps: 19_200.0,
        }
    }
}

impl RewardParams {
    pub fn violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        let mut bad = |field: &'static str, reason: &str| {
            out.push(Error::InvalidHyperparameter {
                field,
                reason: reason.into(),
            })
        };
        if !(0.0..=1.0).contains(&self.lambda) {
            bad("lambda", "must lie in [0, 1]");
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            bad("alpha", "must be positive");
        }
        if !(self.cpu_bin_width > 0.0) {
            bad("cpu_bin_width", "must be positive");
        }
        if !(self.mem_bin_width > 0.0) {
            bad("mem_bin_width", "must be positive");
        }
        if !(self.gmac_edges[0] <= self.gmac_edges[1]) {
            bad("gmac_edges", "must be ascending");
        }
        if !(self.data_edges_mb[0] <= self.data_edges_mb[1]) {
            bad("data_edges_mb", "must be ascending");
        }
        if !(self.max_bandwidth_mbps > 0.0) {
            bad("max_bandwidth_mbps", "must be positive");
        }
        out
    }
}

/// Discretized (CPU, memory, GMAC, data volume) context.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContextKey {
    pub cpu_bin: u8,
    pub mem_bin: u8,
    pub gmac_bin: u8,
    pub data_bin: u8,
}

impl ContextKey {
    pub const CPU_BINS: u8 = 4;
    pub const MEM_BINS: u8 = 4;
    pub const GMAC_BINS: u8 = 3;
    pub const DATA_BINS: u8 = 3;
}

fn width_bin(value: f64, width: f64, bins: u8) -> u8 {
    let b = libm::floor(value / width);
    if !(b > 0.0) {
        0
    } else if b >= f64::from(bins - 1) {
        bins - 1
    } else {
        b as u8
    }
}

fn edge_bin(value: f64, edges: [f64; 2]) -> u8 {
    if value < edges[0] {
        0
    } else if value <= edges[1] {
        1
    } else {
        2
    }
}

/// Context bucket of a post-action measurement.
pub fn bucket_key(record: &MeasurementRecord, model: &ModelProfile, params: &RewardParams) -> ContextKey {
    let telemetry = record.dynamic_features();
    let mem_util = telemetry.total_bandwidth() / params.max_bandwidth_mbps;
    ContextKey {
        cpu_bin: width_bin(telemetry.mean_cpu_util(), params.cpu_bin_width, ContextKey::CPU_BINS),
        mem_bin: width_bin(mem_util, params.mem_bin_width, ContextKey::MEM_BINS),
        gmac_bin: edge_bin(model.gmac, params.gmac_edges),
        data_bin: edge_bin(model.data_bytes() / 1.0e6, params.data_edges_mb),
    }
}

/// Incrementally maintained arithmetic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunningMean {
    pub mean: f64,
    pub count: u64,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.mean += (x - self.mean) / self.count as f64;
    }
}

impl Default for RunningMean {
    fn default() -> Self {
        Self { mean: 0.0, count: 0 }
    }
}

/// Per-context and global running PPW means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "StoreSnapshot", try_from = "StoreSnapshot")]
pub struct ContextBaselineStore {
    lambda: f64,
    alpha: f64,
    buckets: BTreeMap<ContextKey, RunningMean>,
    global: RunningMean,
}

impl ContextBaselineStore {
    pub fn new(lambda: f64, alpha: f64) -> Self {
        Self {
            lambda,
            alpha,
            buckets: BTreeMap::new(),
            global: RunningMean::default(),
        }
    }

    pub fn from_params(params: &RewardParams) -> Self {
        Self::new(params.lambda, params.alpha)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn bucket(&self, key: &ContextKey) -> Option<RunningMean> {
        self.buckets.get(key).copied()
    }

    pub fn buckets(&self) -> impl Iterator<Item = (&ContextKey, &RunningMean)> {
        self.buckets.iter()
    }

    pub fn global(&self) -> Option<RunningMean> {
        (self.global.count > 0).then_some(self.global)
    }

    /// `(1 - lambda) * local + lambda * global`, falling back from an empty
    /// bucket to the global mean and from an empty store to `ppw`.
    pub fn baseline(&self, key: &ContextKey, ppw: f64) -> f64 {
        let global = self.global().map_or(ppw, |g| g.mean);
        let local = self.bucket(key).map_or(global, |b| b.mean);
        if local == global {
            return local;
        }
        (1.0 - self.lambda) * local + self.lambda * global
    }

    pub fn update_means(&mut self, key: ContextKey, ppw: f64) {
        self.buckets.entry(key).or_default().push(ppw);
        self.global.push(ppw);
    }
}

/// `tanh((ppw - baseline) / (alpha * max(1, |baseline|)))`.
pub fn shaped_reward(ppw: f64, baseline: f64, alpha: f64) -> f64 {
    libm::tanh((ppw - baseline) / (alpha * baseline.abs().max(1.0)))
}

/// Reward of one measured outcome. Updates `store` unless the constraint is
/// violated, in which case the reward is exactly -1.
pub fn calculate_reward(
    record: &MeasurementRecord,
    model: &ModelProfile,
    fps_constraint: f64,
    store: &mut ContextBaselineStore,
    params: &RewardParams,
) -> Result<f64> {
    if !(record.p_fpga > 0.0) {
        return Err(Error::NonPositivePower(record.p_fpga));
    }
    if record.fps < fps_constraint {
        return Ok(VIOLATION_REWARD);
    }
    let ppw = record.ppw();
    let key = bucket_key(record, model, params);
    let baseline = store.baseline(&key, ppw);
    let reward = shaped_reward(ppw, baseline, store.alpha);
    store.update_means(key, ppw);
    Ok(reward)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketEntry {
    #[serde(flatten)]
    pub key: ContextKey,
    pub mean: f64,
    pub count: u64,
}

/// Serializable form of [`ContextBaselineStore`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreSnapshot {
    pub lambda: f64,
    pub alpha: f64,
    pub global: RunningMean,
    pub buckets: Vec<BucketEntry>,
}

impl From<ContextBaselineStore> for StoreSnapshot {
    fn from(s: ContextBaselineStore) -> Self {
        StoreSnapshot {
            lambda: s.lambda,
            alpha: s.alpha,
            global: s.global,
            buckets: s
                .buckets
                .into_iter()
                .map(|(key, m)| BucketEntry {
                    key,
                    mean: m.mean,
                    count: m.count,
                })
                .collect(),
        }
    }
}

impl TryFrom<StoreSnapshot> for ContextBaselineStore {
    type Error = Error;

    fn try_from(s: StoreSnapshot) -> Result<Self> {
        let mut buckets = BTreeMap::new();
        let mut total = 0u64;
        for b in s.buckets {
            if b.count == 0 || !(b.mean.is_finite() && b.mean > 0.0) {
                return Err(Error::Parse(alloc::format!("invalid bucket {:?}", b.key)));
            }
            total += b.count;
            if buckets
                .insert(
                    b.key,
                    RunningMean {
                        mean: b.mean,
                        count: b.count,
                    },
                )
                .is_some()
            {
                return Err(Error::Parse(alloc::format!("duplicate bucket {:?}", b.key)));
            }
        }
        if total != s.global.count {
            return Err(Error::Parse(alloc::format!(
                "global count {} differs from bucket total {total}",
                s.global.count
            )));
        }
        Ok(ContextBaselineStore {
            lambda: s.lambda,
            alpha: s.alpha,
            buckets,
            global: s.global,
        })
    }
}
