//! Round-robin training loop over (workload, model) pairs.

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::PolicyParameters;
use super::ppo::{policy_forward, ppo_update, sample_action, EpisodeSample, PpoHyperparameters};
use crate::corpus::MeasurementTable;
use crate::env::{Environment, Normalization};
use crate::error::{Error, Result};
use crate::model::WorkloadState;
use crate::reward::{ContextBaselineStore, RewardParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub episodes: u64,
    pub fps_constraint: f64,
    pub seed: u64,
    pub hyper: PpoHyperparameters,
    pub reward: RewardParams,
    pub normalization: Normalization,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            episodes: 200_000,
            fps_constraint: 30.0,
            seed: 0,
            hyper: PpoHyperparameters::default(),
            reward: RewardParams::default(),
            normalization: Normalization::default(),
        }
    }
}

/// One row per PPO update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateLog {
    pub update: usize,
    /// Episodes completed when the update ran.
    pub episodes: u64,
    pub mean_reward: f64,
    pub mean_ppw: f64,
    /// Fraction of the batch meeting the FPS constraint.
    pub satisfaction: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: PolicyParameters,
    pub store: ContextBaselineStore,
    pub log: Vec<UpdateLog>,
}

/// The (workload, model) pair visited in episode `e`: models cycle fastest.
pub fn round_robin<'a, M>(e: u64, models: &'a [M], workloads: &[WorkloadState]) -> (WorkloadState, &'a M) {
    let n = models.len() as u64;
    let w = workloads[((e / n) % workloads.len() as u64) as usize];
    (w, &models[(e % n) as usize])
}

/// Network initialization used by [`train`] for `seed`.
pub fn initial_parameters(seed: u64) -> PolicyParameters {
    PolicyParameters::initialize(&mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn train(
    table: &MeasurementTable,
    models: &[String],
    workloads: &[WorkloadState],
    settings: &TrainSettings,
) -> Result<TrainOutcome> {
    if models.is_empty() || workloads.is_empty() {
        return Err(Error::EmptyModelList);
    }
    settings.hyper.validate()?;
    if let Some(e) = settings.reward.violations().into_iter().next() {
        return Err(e);
    }
    for m in models {
        table.model(m).ok_or_else(|| Error::UnknownModel(m.clone()))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut params = PolicyParameters::initialize(&mut rng);
    let mut store = ContextBaselineStore::from_params(&settings.reward);
    let mut env = Environment::new(table, settings.reward, settings.normalization);
    let mut batch = Vec::with_capacity(settings.hyper.batch_size);
    let mut ppw_sum = 0.0;
    let mut satisfied = 0usize;
    let mut log = Vec::new();

    for e in 0..settings.episodes {
        let (w, model) = round_robin(e, models, workloads);
        let state = env.reset(model, w, settings.fps_constraint)?;
        let (probs, value) = policy_forward(&params, &state)?;
        let (action, log_prob) = sample_action(&probs, &mut rng)?;
        let (outcome, _) = env.step(action, &mut store)?;
        ppw_sum += outcome.ppw;
        if outcome.record.fps >= settings.fps_constraint {
            satisfied += 1;
        }
        batch.push(EpisodeSample {
            state,
            action,
            log_prob,
            reward: outcome.reward,
            value,
        });
        if batch.len() == settings.hyper.batch_size {
            let n = batch.len() as f64;
            let mean_reward = batch.iter().map(|s| s.reward).sum::<f64>() / n;
            let stats = ppo_update(&mut params, &batch, &settings.hyper, &mut rng)?;
            log.push(UpdateLog {
                update: log.len(),
                episodes: e + 1,
                mean_reward,
                mean_ppw: ppw_sum / n,
                satisfaction: satisfied as f64 / n,
                policy_loss: stats.loss.policy,
                value_loss: stats.loss.value,
                entropy: stats.loss.entropy,
                clip_fraction: stats.loss.clip_fraction,
            });
            batch.clear();
            ppw_sum = 0.0;
            satisfied = 0;
        }
    }
    Ok(TrainOutcome { params, store, log })
}
