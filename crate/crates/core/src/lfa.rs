//! Q-learning with one linear model per joint action, trained online by SGD.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::irl::RewardWeights;
use crate::learn::{self, TrainError, TrainingStats};
use crate::seed;
use crate::world::{self, Action, FeatureVector, Scenario, UavState, NUM_ACTIONS, NUM_FEATURES};

/// Bias plus one weight per feature.
pub const LFA_ROW_LEN: usize = NUM_FEATURES + 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfaModel {
    /// One row per joint action index.
    pub theta: Vec<[f64; LFA_ROW_LEN]>,
}

impl Default for LfaModel {
    fn default() -> Self {
        LfaModel { theta: vec![[0.0; LFA_ROW_LEN]; NUM_ACTIONS] }
    }
}

fn augmented(phi: &FeatureVector) -> [f64; LFA_ROW_LEN] {
    let mut x = [1.0; LFA_ROW_LEN];
    x[1..].copy_from_slice(&phi.0);
    x
}

impl LfaModel {
    pub fn predict_q(&self, phi: &FeatureVector, action: usize) -> f64 {
        let x = augmented(phi);
        self.theta[action].iter().zip(&x).map(|(t, v)| t * v).sum()
    }

    pub fn q_values(&self, phi: &FeatureVector) -> [f64; NUM_ACTIONS] {
        std::array::from_fn(|a| self.predict_q(phi, a))
    }

    pub fn greedy_action(&self, phi: &FeatureVector) -> Action {
        Action::from_index(learn::argmax(&self.q_values(phi))).expect("argmax is in range")
    }

    /// One gradient-descent step on `(target - theta_a . x)^2 / 2` for the
    /// taken action's row only.
    pub fn sgd_update(&mut self, phi: &FeatureVector, action: usize, target: f64, alpha: f64) {
        let x = augmented(phi);
        let err = target - self.predict_q(phi, action);
        for (t, v) in self.theta[action].iter_mut().zip(&x) {
            *t += alpha * err * v;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().flatten().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LfaConfig {
    pub num_eps: u32,
    pub alpha_sgd: f64,
    pub gamma: f64,
    pub eps_floor: f64,
}

impl Default for LfaConfig {
    fn default() -> Self {
        LfaConfig { num_eps: 10_000, alpha_sgd: 0.001, gamma: 0.99, eps_floor: 0.1 }
    }
}

impl LfaConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        learn::check_rate("alpha_sgd", self.alpha_sgd)?;
        learn::check_gamma(self.gamma)?;
        learn::check_floor(self.eps_floor)
    }
}

pub fn train(
    scenario: &Scenario,
    weights: &RewardWeights,
    config: &LfaConfig,
    master_seed: u64,
) -> Result<(LfaModel, TrainingStats), TrainError> {
    config.validate()?;
    let mut rng = seed::rng_for(master_seed, "lfa_train", 0);
    let mut model = LfaModel::default();
    let mut stats = TrainingStats::default();

    for episode in 0..config.num_eps {
        let eps = learn::epsilon_schedule(episode, config.num_eps, config.eps_floor);
        let mut state = UavState::start(scenario.source_cell);
        let mut obs = world::initial_observation(scenario, scenario.source_cell);
        let mut ret = 0.0;
        while !state.done {
            let action = if rng.gen::<f64>() < eps {
                Action::from_index(rng.gen_range(0..NUM_ACTIONS))?
            } else {
                model.greedy_action(&obs)
            };
            let out = world::step(scenario, &state, action)?;
            let reward = weights.reward(&out.features);
            let max_next = model.q_values(&out.features).into_iter().fold(f64::NEG_INFINITY, f64::max);
            let target = learn::q_target(reward, config.gamma, max_next, out.state.done);
            model.sgd_update(&obs, action.index(), target, config.alpha_sgd);
            stats.gradient_steps += 1;
            if !model.theta[action.index()].iter().all(|v| v.is_finite()) {
                return Err(TrainError::NonFinite { episode, step: out.state.hops_used });
            }
            ret += reward;
            obs = out.features;
            state = out.state;
        }
        stats.episode_returns.push(ret);
        stats.episode_reached.push(state.cell == scenario.dest_cell);
    }
    Ok((model, stats))
}
