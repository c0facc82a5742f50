//! Deep Q-network: a small ReLU MLP mapping features to the 36 joint-action
//! values, trained from a replay memory with Adam.

pub mod adam;
pub mod mlp;
pub mod replay;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState};
pub use mlp::{mse_loss, Layer, MlpParams, Sample};
pub use replay::{ReplayBuffer, Transition};

use crate::irl::RewardWeights;
use crate::learn::{self, TrainError, TrainingStats};
use crate::seed;
use crate::world::{self, Action, FeatureVector, Scenario, UavState, NUM_ACTIONS, NUM_FEATURES};

pub const LAYER_SIZES: [usize; 4] = [NUM_FEATURES, 30, 30, NUM_ACTIONS];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnConfig {
    pub num_eps: u32,
    pub learning_rate: f64,
    pub gamma: f64,
    pub eps_floor: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            num_eps: 10_000,
            learning_rate: 0.001,
            gamma: 0.99,
            eps_floor: 0.1,
            batch_size: 24,
            replay_capacity: 10_000,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        learn::check_rate("learning_rate", self.learning_rate)?;
        learn::check_gamma(self.gamma)?;
        learn::check_floor(self.eps_floor)?;
        if self.batch_size == 0 || self.batch_size > self.replay_capacity {
            return Err(TrainError::InvalidConfig {
                field: "batch_size",
                reason: format!("must be in 1..={}, got {}", self.replay_capacity, self.batch_size),
            });
        }
        Ok(())
    }
}

pub fn q_values(params: &MlpParams, phi: &FeatureVector) -> Vec<f64> {
    params.forward(&phi.0)
}

pub fn greedy_action(params: &MlpParams, phi: &FeatureVector) -> Action {
    Action::from_index(learn::argmax(&q_values(params, phi))).expect("network has 36 outputs")
}

pub fn initial_params(master_seed: u64) -> MlpParams {
    MlpParams::glorot(&LAYER_SIZES, &mut seed::rng_for(master_seed, "dqn_init", 0))
}

/// One optimiser step on a batch drawn from `replay`; returns the loss.
fn fit_batch(
    params: &mut MlpParams,
    adam: &mut AdamState,
    replay: &ReplayBuffer,
    rng: &mut seed::Rng,
    config: &DqnConfig,
) -> Option<f64> {
    let idx = replay.sample_indices(rng, config.batch_size)?;
    let picked: Vec<&Transition> = idx.iter().map(|&i| replay.get(i).expect("sampled index in range")).collect();
    let targets: Vec<f64> = picked
        .iter()
        .map(|t| {
            let max_next = if t.done {
                0.0
            } else {
                params.forward(&t.next_phi.0).into_iter().fold(f64::NEG_INFINITY, f64::max)
            };
            learn::q_target(t.reward, config.gamma, max_next, t.done)
        })
        .collect();
    let batch: Vec<Sample> = picked
        .iter()
        .zip(&targets)
        .map(|(t, &target)| Sample { input: &t.phi.0, action: t.action, target })
        .collect();
    let (grads, loss) = params.backward(&batch);
    adam_step(params, &grads, adam, config.learning_rate);
    Some(loss)
}

pub fn train(
    scenario: &Scenario,
    weights: &RewardWeights,
    config: &DqnConfig,
    master_seed: u64,
) -> Result<(MlpParams, TrainingStats), TrainError> {
    config.validate()?;
    let mut params = initial_params(master_seed);
    let mut adam = AdamState::new(&params);
    let mut replay = ReplayBuffer::new(config.replay_capacity);
    let mut rng = seed::rng_for(master_seed, "dqn_train", 0);
    let mut stats = TrainingStats::default();

    for episode in 0..config.num_eps {
        let eps = learn::epsilon_schedule(episode, config.num_eps, config.eps_floor);
        let fit = learn::past_warmup(episode, config.num_eps);
        let mut state = UavState::start(scenario.source_cell);
        let mut obs = world::initial_observation(scenario, scenario.source_cell);
        let mut ret = 0.0;
        while !state.done {
            let action = if rng.gen::<f64>() < eps {
                Action::from_index(rng.gen_range(0..NUM_ACTIONS))?
            } else {
                greedy_action(&params, &obs)
            };
            let out = world::step(scenario, &state, action)?;
            let reward = weights.reward(&out.features);
            replay.push(Transition {
                phi: obs,
                action: action.index(),
                reward,
                next_phi: out.features,
                done: out.state.done,
            });
            if fit {
                if let Some(loss) = fit_batch(&mut params, &mut adam, &replay, &mut rng, config) {
                    stats.gradient_steps += 1;
                    if !loss.is_finite() {
                        return Err(TrainError::NonFinite { episode, step: out.state.hops_used });
                    }
                }
            }
            ret += reward;
            obs = out.features;
            state = out.state;
        }
        if fit && !params.is_finite() {
            return Err(TrainError::NonFinite { episode, step: state.hops_used });
        }
        stats.episode_returns.push(ret);
        stats.episode_reached.push(state.cell == scenario.dest_cell);
    }
    Ok((params, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{build_scenario, ScenarioConfig};

    #[test]
    fn zero_params_pick_action_zero() {
        let p = MlpParams::zeros(&LAYER_SIZES);
        assert_eq!(greedy_action(&p, &FeatureVector([0.2; 5])).index(), 0);
    }

    #[test]
    fn constructed_network_prefers_output_17() {
        let mut p = MlpParams::zeros(&LAYER_SIZES);
        p.layers[2].biases[17] = 1.0;
        let grid = [0.0, 0.5, 1.0];
        for a in grid {
            for b in grid {
                for c in grid {
                    assert_eq!(greedy_action(&p, &FeatureVector([a, b, c, a * b, 1.0 - c])).index(), 17);
                }
            }
        }
    }

    #[test]
    fn output_bias_shift_keeps_argmax() {
        let p = initial_params(3);
        let mut shifted = p.clone();
        for b in &mut shifted.layers[2].biases {
            *b += 4.25;
        }
        for i in 0..20 {
            let phi = FeatureVector([i as f64 / 20.0, 0.3, 0.0, 0.8, (i % 3) as f64 / 3.0]);
            assert_eq!(greedy_action(&p, &phi), greedy_action(&shifted, &phi));
        }
    }

    #[test]
    fn glorot_limits_respected() {
        let p = initial_params(5);
        for l in &p.layers {
            let limit = (6.0 / (l.inputs + l.outputs) as f64).sqrt();
            assert!(l.weights.iter().all(|w| w.abs() <= limit));
            assert!(l.biases.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn warmup_only_run_leaves_params_at_init() {
        let sc = build_scenario(&ScenarioConfig::default(), 1).unwrap();
        let w = RewardWeights::normalized([1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let cfg = DqnConfig { num_eps: 1, ..Default::default() };
        let (p, stats) = train(&sc, &w, &cfg, 7).unwrap();
        assert_eq!(p, initial_params(7));
        assert_eq!(stats.gradient_steps, 0);
    }

    #[test]
    fn training_is_reproducible() {
        let sc = build_scenario(&ScenarioConfig::default(), 1).unwrap();
        let w = RewardWeights::normalized([-0.6, -0.2, 0.7, 0.1, -0.3]).unwrap();
        let cfg = DqnConfig { num_eps: 60, ..Default::default() };
        let a = train(&sc, &w, &cfg, 21).unwrap();
        let b = train(&sc, &w, &cfg, 21).unwrap();
        assert_eq!(a, b);
        assert!(a.1.gradient_steps > 0);
        assert_ne!(a.0, initial_params(21));
    }

    #[test]
    fn invalid_config_rejected() {
        let sc = build_scenario(&ScenarioConfig::default(), 1).unwrap();
        let w = RewardWeights::normalized([1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let cfg = DqnConfig { batch_size: 0, ..Default::default() };
        assert!(matches!(train(&sc, &w, &cfg, 1), Err(TrainError::InvalidConfig { field: "batch_size", .. })));
    }
}
