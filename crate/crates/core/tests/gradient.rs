use dpuconfig_core::agent::{loss_and_grad, ppo_loss, EpisodeSample, PpoHyperparameters, PARAMETER_COUNT};
use dpuconfig_core::env::{StateVector, STATE_DIM};
use dpuconfig_core::ACTION_COUNT;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn analytic_gradient_matches_central_differences() {
    let hyper = PpoHyperparameters::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    for _ in 0..3 {
        let w: Vec<f64> = (0..PARAMETER_COUNT).map(|_| rng.random_range(-0.3..0.3)).collect();
        let batch: Vec<EpisodeSample> = (0..10)
            .map(|_| {
                let mut s = [0.0; STATE_DIM];
                s.iter_mut().for_each(|x| *x = rng.random_range(0.0..1.0));
                EpisodeSample {
                    state: StateVector(s),
                    action: rng.random_range(0..ACTION_COUNT),
                    log_prob: rng.random_range(-3.6..-3.0),
                    reward: rng.random_range(-1.0..1.0),
                    value: rng.random_range(-0.5..0.5),
                }
            })
            .collect();
        let (_, grad) = loss_and_grad(&w, &batch, &hyper).unwrap();
        let mut wp = w.clone();
        for i in (0..PARAMETER_COUNT).step_by(13) {
            wp[i] = w[i] + h;
            let up = ppo_loss(&wp, &batch, &hyper).unwrap().total;
            wp[i] = w[i] - h;
            let down = ppo_loss(&wp, &batch, &hyper).unwrap().total;
            wp[i] = w[i];
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
            assert!(rel < 1e-4, "param {i}: analytic {} numeric {fd}", grad[i]);
        }
    }
}
