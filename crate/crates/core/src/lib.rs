//! DPU configuration selection under co-located workloads: hardware model,
//! measurement corpus, RL environment and reward, PPO agent, evaluation and
//! the runtime reconfiguration controller.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod agent;
pub mod arch;
pub mod controller;
pub mod corpus;
pub mod env;
pub mod error;
pub mod evaluator;
pub mod model;
pub mod reward;

pub use arch::{action_space, DpuArchitecture, DpuConfiguration, ACTION_COUNT};
pub use error::{Error, Result};
pub use model::{ModelProfile, WorkloadState};
