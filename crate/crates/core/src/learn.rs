//! Pieces shared by the Q-learning agents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::WorldError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("non-finite parameters after episode {episode}, step {step}; the learning rate is probably too large")]
    NonFinite { episode: u32, step: u32 },
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Per-episode outcome of a training run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingStats {
    pub episode_returns: Vec<f64>,
    pub episode_reached: Vec<bool>,
    pub gradient_steps: u64,
}

impl TrainingStats {
    /// Accumulated reward of the final `frac` of episodes: (mean, variance, range).
    pub fn tail_summary(&self, frac: f64) -> Option<(f64, f64, f64)> {
        let n = self.episode_returns.len();
        let k = ((n as f64 * frac).ceil() as usize).clamp(1, n.max(1));
        let tail = self.episode_returns.get(n.checked_sub(k)?..)?;
        if tail.is_empty() {
            return None;
        }
        let mean = tail.iter().sum::<f64>() / k as f64;
        let var = tail.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / k as f64;
        let lo = self.episode_returns.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.episode_returns.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some((mean, var, hi - lo))
    }
}

/// Exploration probability: 1 during the first tenth of training, then a
/// linear decay of `1/num_eps` per episode down to `floor`.
pub fn epsilon_schedule(episode: u32, num_eps: u32, floor: f64) -> f64 {
    let n = num_eps as f64;
    let warmup = n / 10.0;
    let e = episode as f64;
    if e <= warmup {
        return 1.0;
    }
    (1.0 - (e - warmup) / n).max(floor)
}

/// True once the first tenth of episodes has passed.
pub fn past_warmup(episode: u32, num_eps: u32) -> bool {
    episode as f64 > num_eps as f64 / 10.0
}

pub fn q_target(reward: f64, gamma: f64, max_next_q: f64, done: bool) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * max_next_q
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_rate(field: &'static str, v: f64) -> Result<(), TrainError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(TrainError::InvalidConfig { field, reason: format!("must be positive, got {v}") })
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<(), TrainError> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(TrainError::InvalidConfig { field: "gamma", reason: format!("must be in (0, 1], got {gamma}") })
    }
}

pub(crate) fn check_floor(floor: f64) -> Result<(), TrainError> {
    if floor > 0.0 && floor < 1.0 {
        Ok(())
    } else {
        Err(TrainError::InvalidConfig { field: "eps_floor", reason: format!("must be in (0, 1), got {floor}") })
    }
}
