//! Clipped-surrogate PPO for single-step episodes.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{backward, forward, layout, PolicyParameters, PARAMETER_COUNT};
use crate::arch::ACTION_COUNT;
use crate::env::StateVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoHyperparameters {
    pub learning_rate: f64,
    pub clip_epsilon: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Episodes collected per update.
    pub batch_size: usize,
    pub epochs: usize,
    pub minibatch_size: usize,
}

impl Default for PpoHyperparameters {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            clip_epsilon: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            batch_size: 256,
            epochs: 4,
            minibatch_size: 64,
        }
    }
}

impl PpoHyperparameters {
    pub fn violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        let mut bad = |field: &'static str, reason: &str| {
            out.push(Error::InvalidHyperparameter {
                field,
                reason: reason.into(),
            })
        };
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            bad("learning_rate", "must be positive");
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            bad("clip_epsilon", "must lie in (0, 1)");
        }
        if !(self.value_coef.is_finite() && self.value_coef >= 0.0) {
            bad("value_coef", "must be non-negative");
        }
        if !(self.entropy_coef.is_finite() && self.entropy_coef >= 0.0) {
            bad("entropy_coef", "must be non-negative");
        }
        if self.batch_size == 0 {
            bad("batch_size", "must be at least 1");
        }
        if self.epochs == 0 {
            bad("epochs", "must be at least 1");
        }
        if self.minibatch_size == 0 {
            bad("minibatch_size", "must be at least 1");
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// One single-step episode as seen by the learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSample {
    pub state: StateVector,
    pub action: usize,
    /// Log-probability of `action` under the sampling policy.
    pub log_prob: f64,
    pub reward: f64,
    /// Value estimate under the sampling policy.
    pub value: f64,
}

impl EpisodeSample {
    pub fn advantage(&self) -> f64 {
        self.reward - self.value
    }
}

/// Batch means of the loss components. `total` is the minimized quantity
/// `policy + value_coef * value - entropy_coef * entropy`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    /// Fraction of samples whose ratio was clipped out of the gradient.
    pub clip_fraction: f64,
}

fn check_batch(batch: &[EpisodeSample]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let Some(s) = batch.iter().find(|s| s.action >= ACTION_COUNT) {
        return Err(Error::ActionOutOfRange(s.action));
    }
    Ok(())
}

/// PPO loss on `batch`; accumulates its gradient into `grad` when given.
fn loss_impl(
    weights: &[f64],
    batch: &[EpisodeSample],
    hyper: &PpoHyperparameters,
    mut grad: Option<&mut [f64]>,
) -> LossTerms {
    let n = batch.len() as f64;
    let eps = hyper.clip_epsilon;
    let mut terms = LossTerms::default();
    let mut clipped = 0usize;
    for s in batch {
        let f = forward(weights, &s.state);
        let adv = s.advantage();
        let ratio = libm::exp(f.log_probs[s.action] - s.log_prob);
        let unclipped = ratio * adv;
        let bounded = ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
        let entropy = f.entropy();
        let err = f.value - s.reward;
        terms.policy -= unclipped.min(bounded) / n;
        terms.value += err * err / n;
        terms.entropy += entropy / n;

        // The min picks the unclipped branch exactly when the ratio has not
        // crossed the bound in the direction the advantage pushes it.
        let active = if adv >= 0.0 { ratio <= 1.0 + eps } else { ratio >= 1.0 - eps };
        if !active {
            clipped += 1;
        }
        if let Some(g) = grad.as_deref_mut() {
            let d_logp = if active { -unclipped / n } else { 0.0 };
            let mut d_logits = [0.0; ACTION_COUNT];
            for k in 0..ACTION_COUNT {
                let onehot = if k == s.action { 1.0 } else { 0.0 };
                let p = f.probs[k];
                // d(-c_e H)/dz_k = c_e p_k (log p_k + H)
                d_logits[k] = d_logp * (onehot - p) + hyper.entropy_coef / n * p * (f.log_probs[k] + entropy);
            }
            let d_value = hyper.value_coef * 2.0 * err / n;
            backward(weights, &f, &d_logits, d_value, g);
        }
    }
    terms.total = terms.policy + hyper.value_coef * terms.value - hyper.entropy_coef * terms.entropy;
    terms.clip_fraction = clipped as f64 / n;
    terms
}

pub fn ppo_loss(weights: &[f64], batch: &[EpisodeSample], hyper: &PpoHyperparameters) -> Result<LossTerms> {
    check_batch(batch)?;
    Ok(loss_impl(weights, batch, hyper, None))
}

/// Loss terms and the gradient of `total` with respect to every weight.
pub fn loss_and_grad(
    weights: &[f64],
    batch: &[EpisodeSample],
    hyper: &PpoHyperparameters,
) -> Result<(LossTerms, Vec<f64>)> {
    check_batch(batch)?;
    if weights.len() != PARAMETER_COUNT {
        return Err(Error::ParameterShape {
            expected: PARAMETER_COUNT,
            found: weights.len(),
        });
    }
    let mut grad = vec![0.0; PARAMETER_COUNT];
    let terms = loss_impl(weights, batch, hyper, Some(&mut grad));
    Ok((terms, grad))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    /// Loss terms averaged over every minibatch of every epoch.
    pub loss: LossTerms,
    pub minibatches: usize,
}

/// Several epochs of shuffled-minibatch Adam steps on `batch`.
pub fn ppo_update<R: Rng + ?Sized>(
    params: &mut PolicyParameters,
    batch: &[EpisodeSample],
    hyper: &PpoHyperparameters,
    rng: &mut R,
) -> Result<UpdateStats> {
    check_batch(batch)?;
    hyper.validate()?;
    params.validate()?;
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut stats = UpdateStats::default();
    let mut mb = Vec::with_capacity(hyper.minibatch_size);
    for epoch in 0..hyper.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(hyper.minibatch_size) {
            mb.clear();
            mb.extend(chunk.iter().map(|&i| batch[i]));
            let (terms, grad) = loss_and_grad(&params.weights, &mb, hyper)?;
            if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    tensor: layout::tensor_of(index),
                    index,
                    epoch,
                });
            }
            params.adam.apply(&mut params.weights, &grad, hyper.learning_rate);
            stats.minibatches += 1;
            stats.loss.policy += terms.policy;
            stats.loss.value += terms.value;
            stats.loss.entropy += terms.entropy;
            stats.loss.total += terms.total;
            stats.loss.clip_fraction += terms.clip_fraction;
        }
    }
    let k = stats.minibatches as f64;
    stats.loss.policy /= k;
    stats.loss.value /= k;
    stats.loss.entropy /= k;
    stats.loss.total /= k;
    stats.loss.clip_fraction /= k;
    if params.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("parameters"));
    }
    Ok(stats)
}

/// Action probabilities and value estimate.
pub fn policy_forward(params: &PolicyParameters, state: &StateVector) -> Result<([f64; ACTION_COUNT], f64)> {
    if state.0.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("state"));
    }
    if params.weights.len() != PARAMETER_COUNT {
        return Err(Error::ParameterShape {
            expected: PARAMETER_COUNT,
            found: params.weights.len(),
        });
    }
    let f = forward(&params.weights, state);
    if f.probs.iter().any(|p| !p.is_finite()) || !f.value.is_finite() {
        return Err(Error::NonFinite("policy output"));
    }
    Ok((f.probs, f.value))
}

/// Draws an index from `probs` and returns it with its log-probability.
pub fn sample_action<R: Rng + ?Sized>(probs: &[f64; ACTION_COUNT], rng: &mut R) -> Result<(usize, f64)> {
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::DegenerateDistribution);
    }
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateDistribution);
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        chosen = Some(i);
        acc += p;
        if target < acc {
            break;
        }
    }
    let i = chosen.ok_or(Error::DegenerateDistribution)?;
    Ok((i, libm::log(probs[i] / total)))
}

/// Most probable action, lowest index on ties.
pub fn act_greedy(params: &PolicyParameters, state: &StateVector) -> Result<usize> {
    let (probs, _) = policy_forward(params, state)?;
    Ok(argmax(&probs))
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
