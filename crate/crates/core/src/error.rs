use alloc::string::String;

use crate::arch::DpuConfiguration;
use crate::model::WorkloadState;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid model profile `{model}`: {reason}")]
    InvalidModel { model: String, reason: String },

    #[error("invalid calibration parameter `{field}`: {reason}")]
    InvalidCalibration { field: &'static str, reason: String },

    #[error("configuration {0} exceeds the device instance limit")]
    InvalidConfiguration(DpuConfiguration),

    #[error("unsupported pruning ratio {0} (expected 0, 0.25 or 0.5)")]
    UnsupportedPruningRatio(f64),

    #[error("empty model list")]
    EmptyModelList,

    #[error("train/test split needs three distinct GMAC clusters, found {0}")]
    TooFewClusters(usize),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("no measurement for model `{model}`, {config}, state {workload}")]
    MissingRecord {
        model: String,
        config: DpuConfiguration,
        workload: WorkloadState,
    },

    #[error("action index {0} out of range 0..26")]
    ActionOutOfRange(usize),

    #[error("step called before reset")]
    NotReset,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("non-positive FPGA power {0} W")]
    NonPositivePower(f64),

    #[error("invalid measurement: {0}")]
    InvalidRecord(String),

    #[error("degenerate action distribution")]
    DegenerateDistribution,

    #[error("empty batch")]
    EmptyBatch,

    #[error("non-finite gradient for parameter {index} ({tensor}) in epoch {epoch}")]
    NonFiniteGradient {
        tensor: &'static str,
        index: usize,
        epoch: usize,
    },

    #[error("invalid hyperparameter `{field}`: {reason}")]
    InvalidHyperparameter { field: &'static str, reason: String },

    #[error("parameter vector has length {found}, expected {expected}")]
    ParameterShape { expected: usize, found: usize },

    #[error("arrivals are not sorted by time")]
    UnsortedArrivals,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
