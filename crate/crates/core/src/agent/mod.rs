//! PPO learner: network, clipped-surrogate update and training driver.

pub mod network;
pub mod ppo;
pub mod train;

pub use network::{forward, AdamState, PolicyParameters, PARAMETER_COUNT};
pub use ppo::{
    act_greedy, loss_and_grad, policy_forward, ppo_loss, ppo_update, sample_action, EpisodeSample, LossTerms,
    PpoHyperparameters, UpdateStats,
};
pub use train::{initial_parameters, round_robin, train, TrainOutcome, TrainSettings, UpdateLog};
