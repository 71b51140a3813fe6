//! Shared-trunk policy/value MLP on a flat parameter vector with hand-written
//! backpropagation.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arch::ACTION_COUNT;
use crate::env::{StateVector, STATE_DIM};
use crate::error::{Error, Result};

pub const HIDDEN: usize = 64;

/// Offsets of each tensor inside the flat parameter vector (row-major,
/// `[out][in]` for weight matrices).
pub mod layout {
    use super::{ACTION_COUNT, HIDDEN, STATE_DIM};

    pub const W1: usize = 0;
    pub const B1: usize = W1 + HIDDEN * STATE_DIM;
    pub const W2: usize = B1 + HIDDEN;
    pub const B2: usize = W2 + HIDDEN * HIDDEN;
    pub const WP: usize = B2 + HIDDEN;
    pub const BP: usize = WP + ACTION_COUNT * HIDDEN;
    pub const WV: usize = BP + ACTION_COUNT;
    pub const BV: usize = WV + HIDDEN;
    pub const LEN: usize = BV + 1;

    /// Name of the tensor holding flat index `i`.
    pub fn tensor_of(i: usize) -> &'static str {
        match i {
            _ if i < B1 => "w1",
            _ if i < W2 => "b1",
            _ if i < B2 => "w2",
            _ if i < WP => "b2",
            _ if i < BP => "w_policy",
            _ if i < WV => "b_policy",
            _ if i < BV => "w_value",
            _ => "b_value",
        }
    }
}

pub const PARAMETER_COUNT: usize = layout::LEN;

/// Adam moment estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn apply(&mut self, weights: &mut [f64], grad: &[f64], lr: f64) {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.step += 1;
        let c1 = 1.0 - libm::pow(BETA1, self.step as f64);
        let c2 = 1.0 - libm::pow(BETA2, self.step as f64);
        for i in 0..weights.len() {
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * grad[i];
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            weights[i] -= lr * m_hat / (libm::sqrt(v_hat) + EPS);
        }
    }
}

/// Network weights plus optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParameters {
    pub weights: Vec<f64>,
    pub adam: AdamState,
}

impl PolicyParameters {
    /// All-zero weights: uniform policy, zero value.
    pub fn zeroed() -> Self {
        Self::from_weights(vec![0.0; PARAMETER_COUNT]).unwrap()
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.len() != PARAMETER_COUNT {
            return Err(Error::ParameterShape {
                expected: PARAMETER_COUNT,
                found: weights.len(),
            });
        }
        Ok(Self {
            weights,
            adam: AdamState::new(PARAMETER_COUNT),
        })
    }

    /// Xavier-uniform trunk, zero biases, zero heads.
    pub fn initialize<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut w = vec![0.0; PARAMETER_COUNT];
        xavier(&mut w[layout::W1..layout::B1], STATE_DIM, HIDDEN, rng);
        xavier(&mut w[layout::W2..layout::B2], HIDDEN, HIDDEN, rng);
        Self::from_weights(w).unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.weights.len();
        if n != PARAMETER_COUNT || self.adam.m.len() != n || self.adam.v.len() != n {
            return Err(Error::ParameterShape {
                expected: PARAMETER_COUNT,
                found: n.min(self.adam.m.len()).min(self.adam.v.len()),
            });
        }
        if self.weights.iter().chain(&self.adam.m).chain(&self.adam.v).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("parameters"));
        }
        Ok(())
    }
}

fn xavier<R: Rng + ?Sized>(w: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut R) {
    let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    for x in w {
        *x = rng.random_range(-limit..limit);
    }
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub input: [f64; STATE_DIM],
    pub h1: [f64; HIDDEN],
    pub h2: [f64; HIDDEN],
    pub logits: [f64; ACTION_COUNT],
    pub probs: [f64; ACTION_COUNT],
    pub log_probs: [f64; ACTION_COUNT],
    pub value: f64,
}

impl Forward {
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().zip(&self.log_probs).map(|(p, lp)| p * lp).sum::<f64>()
    }
}

fn dense<const I: usize, const O: usize>(w: &[f64], b: &[f64], x: &[f64; I], out: &mut [f64; O]) {
    for o in 0..O {
        let row = &w[o * I..(o + 1) * I];
        let mut acc = b[o];
        for i in 0..I {
            acc += row[i] * x[i];
        }
        out[o] = acc;
    }
}

pub fn forward(weights: &[f64], state: &StateVector) -> Forward {
    use layout::*;
    let x = state.0;
    let mut h1 = [0.0; HIDDEN];
    dense(&weights[W1..B1], &weights[B1..W2], &x, &mut h1);
    h1.iter_mut().for_each(|v| *v = libm::tanh(*v));
    let mut h2 = [0.0; HIDDEN];
    dense(&weights[W2..B2], &weights[B2..WP], &h1, &mut h2);
    h2.iter_mut().for_each(|v| *v = libm::tanh(*v));
    let mut logits = [0.0; ACTION_COUNT];
    dense(&weights[WP..BP], &weights[BP..WV], &h2, &mut logits);
    let mut value = [0.0; 1];
    dense(&weights[WV..BV], &weights[BV..LEN], &h2, &mut value);

    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs = [0.0; ACTION_COUNT];
    for (p, l) in probs.iter_mut().zip(&logits) {
        *p = libm::exp(l - max);
    }
    let z: f64 = probs.iter().sum();
    let log_z = libm::log(z);
    let mut log_probs = [0.0; ACTION_COUNT];
    for k in 0..ACTION_COUNT {
        probs[k] /= z;
        log_probs[k] = logits[k] - max - log_z;
    }
    Forward {
        input: x,
        h1,
        h2,
        logits,
        probs,
        log_probs,
        value: value[0],
    }
}

/// Accumulates into `grad` the gradient of a loss whose partials with
/// respect to the logits and the value output are `d_logits` and `d_value`.
pub fn backward(weights: &[f64], fwd: &Forward, d_logits: &[f64; ACTION_COUNT], d_value: f64, grad: &mut [f64]) {
    use layout::*;
    let mut dh2 = [0.0; HIDDEN];
    for k in 0..ACTION_COUNT {
        let g = d_logits[k];
        if g == 0.0 {
            continue;
        }
        let row = WP + k * HIDDEN;
        for j in 0..HIDDEN {
            grad[row + j] += g * fwd.h2[j];
            dh2[j] += g * weights[row + j];
        }
        grad[BP + k] += g;
    }
    for j in 0..HIDDEN {
        grad[WV + j] += d_value * fwd.h2[j];
        dh2[j] += d_value * weights[WV + j];
    }
    grad[BV] += d_value;

    let mut dz2 = [0.0; HIDDEN];
    for j in 0..HIDDEN {
        dz2[j] = dh2[j] * (1.0 - fwd.h2[j] * fwd.h2[j]);
    }
    let mut dh1 = [0.0; HIDDEN];
    for o in 0..HIDDEN {
        let g = dz2[o];
        let row = W2 + o * HIDDEN;
        for i in 0..HIDDEN {
            grad[row + i] += g * fwd.h1[i];
            dh1[i] += g * weights[row + i];
        }
        grad[B2 + o] += g;
    }
    for o in 0..HIDDEN {
        let g = dh1[o] * (1.0 - fwd.h1[o] * fwd.h1[o]);
        let row = W1 + o * STATE_DIM;
        for i in 0..STATE_DIM {
            grad[row + i] += g * fwd.input[i];
        }
        grad[B1 + o] += g;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_count() {
        assert_eq!(PARAMETER_COUNT, 22 * 64 + 64 + 64 * 64 + 64 + 26 * 64 + 26 + 64 + 1);
        assert_eq!(PARAMETER_COUNT, 7387);
        assert_eq!(layout::tensor_of(0), "w1");
        assert_eq!(layout::tensor_of(layout::LEN - 1), "b_value");
    }

    #[test]
    fn zero_weights_give_uniform_policy() {
        let f = forward(&PolicyParameters::zeroed().weights, &StateVector([0.3; STATE_DIM]));
        for p in f.probs {
            assert!((p - 1.0 / 26.0).abs() < 1e-15);
        }
        assert_eq!(f.value, 0.0);
    }

    #[test]
    fn initial_policy_is_uniform_with_max_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = PolicyParameters::initialize(&mut rng);
        let f = forward(&p.weights, &StateVector([0.7; STATE_DIM]));
        assert!((f.entropy() - libm::log(26.0)).abs() < 1e-12);
        assert!(p.weights[layout::W1..layout::B1].iter().any(|w| *w != 0.0));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut w = vec![0.0; PARAMETER_COUNT];
        for x in &mut w {
            *x = rng.random_range(-2.0..2.0);
        }
        let f = forward(&w, &StateVector([1.0; STATE_DIM]));
        assert!((f.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let g = forward(&w, &StateVector([1.0; STATE_DIM]));
        assert_eq!(f.probs, g.probs);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut w = vec![1.0, -1.0];
        let mut a = AdamState::new(2);
        a.apply(&mut w, &[0.5, -3.0], 0.1);
        assert!((w[0] - 0.9).abs() < 1e-6);
        assert!((w[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn shape_checked() {
        assert_eq!(
            PolicyParameters::from_weights(vec![0.0; 3]),
            Err(Error::ParameterShape {
                expected: PARAMETER_COUNT,
                found: 3
            })
        );
    }
}
