//! Apprenticeship learning: recover reward weights whose optimal policy
//! matches the expert's discounted feature expectations.

pub mod qp;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use qp::{solve_min_norm_svm, QpError, QpSolution, QpStatus};

use crate::dqn::{self, DqnConfig};
use crate::learn::{TrainError, TrainingStats};
use crate::lfa::{self, LfaConfig};
use crate::policy::{self, PolicyModel};
use crate::seed;
use crate::trajectories::{self, Trajectory, TrajectoryError};
use crate::world::{FeatureVector, Scenario, WorldError, NUM_FEATURES};

pub type FeatureExpectation = [f64; NUM_FEATURES];

#[derive(Debug, Error)]
pub enum IrlError {
    #[error("cannot normalise the zero weight vector")]
    ZeroWeights,
    #[error("invalid IRL setting `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("expert trajectories belong to scenario {found}, expected {expected}")]
    ScenarioMismatch { expected: String, found: String },
    #[error("the first separation problem was already infeasible; no policy was trained")]
    NoPolicy,
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Linear reward weights over the five state features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RewardWeights(pub [f64; NUM_FEATURES]);

impl RewardWeights {
    pub fn normalized(w: [f64; NUM_FEATURES]) -> Result<RewardWeights, IrlError> {
        normalize_weights(&w)
    }

    pub fn reward(&self, phi: &FeatureVector) -> f64 {
        reward(self, phi)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Short content hash for artifact bookkeeping.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("weights serialise");
        seed::content_hash(json.as_bytes())
    }
}

pub fn reward(w: &RewardWeights, phi: &FeatureVector) -> f64 {
    phi.dot(&w.0)
}

pub fn policy_value(w: &RewardWeights, mu: &FeatureExpectation) -> f64 {
    w.0.iter().zip(mu).map(|(a, b)| a * b).sum()
}

pub fn normalize_weights(w: &[f64; NUM_FEATURES]) -> Result<RewardWeights, IrlError> {
    let n = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(IrlError::ZeroWeights);
    }
    Ok(RewardWeights(w.map(|v| v / n)))
}

pub fn hyper_distance(w: &RewardWeights, mu_learner: &FeatureExpectation, mu_expert: &FeatureExpectation) -> f64 {
    (policy_value(w, mu_learner) - policy_value(w, mu_expert)).abs()
}

pub fn l2_gap(a: &FeatureExpectation, b: &FeatureExpectation) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "config", rename_all = "snake_case")]
pub enum LearnerSpec {
    Lfa(LfaConfig),
    Dqn(DqnConfig),
}

impl LearnerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::Lfa(_) => "lfa",
            LearnerSpec::Dqn(_) => "dqn",
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            LearnerSpec::Lfa(c) => c.gamma,
            LearnerSpec::Dqn(c) => c.gamma,
        }
    }

    pub fn train(
        &self,
        scenario: &Scenario,
        weights: &RewardWeights,
        master_seed: u64,
    ) -> Result<(PolicyModel, TrainingStats), TrainError> {
        match self {
            LearnerSpec::Lfa(c) => lfa::train(scenario, weights, c, master_seed).map(|(m, s)| (PolicyModel::Lfa(m), s)),
            LearnerSpec::Dqn(c) => dqn::train(scenario, weights, c, master_seed).map(|(m, s)| (PolicyModel::Dqn(m), s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IrlConfig {
    pub eps_irl: f64,
    pub max_iters: usize,
    /// Rollouts averaged to estimate each learner's feature expectation.
    pub rollouts: usize,
}

impl Default for IrlConfig {
    fn default() -> Self {
        IrlConfig { eps_irl: 0.1, max_iters: 25, rollouts: 25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlIterationLog {
    pub iter: usize,
    pub w: RewardWeights,
    pub mu: FeatureExpectation,
    pub hyper_distance: f64,
    pub l2_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Hyper-distance fell below the threshold.
    Converged,
    /// The expert can no longer be separated from the learners.
    Infeasible,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct IrlOutcome {
    pub weights: RewardWeights,
    pub policy: PolicyModel,
    pub log: Vec<IrlIterationLog>,
    pub termination: Termination,
    /// Index into `log` of the returned artifacts.
    pub best_iter: usize,
    pub mu_expert: FeatureExpectation,
    pub training_stats: TrainingStats,
}

/// Mean discounted features of `runs` rollouts from the scenario's source.
pub fn estimate_feature_expectation(
    scenario: &Scenario,
    policy: &PolicyModel,
    gamma: f64,
    runs: usize,
    master_seed: u64,
    stream: u64,
) -> Result<FeatureExpectation, IrlError> {
    let mut trajs: Vec<Trajectory> = Vec::with_capacity(runs);
    for k in 0..runs as u64 {
        let mut rng = seed::rng_for(master_seed, "irl_rollout", stream * 1_000 + k);
        trajs.push(policy::rollout(scenario, policy, scenario.source_cell, &mut rng)?);
    }
    Ok(trajectories::feature_expectation(&trajs, gamma)?)
}

/// The apprenticeship-learning loop. `iteration_hook` sees each log entry as
/// soon as it is produced.
pub fn run_irl(
    scenario: &Scenario,
    expert_trajs: &[Trajectory],
    learner: &LearnerSpec,
    config: &IrlConfig,
    master_seed: u64,
    mut iteration_hook: impl FnMut(&IrlIterationLog),
) -> Result<IrlOutcome, IrlError> {
    if !(config.eps_irl > 0.0) {
        return Err(IrlError::InvalidConfig { field: "eps_irl", reason: format!("must be positive, got {}", config.eps_irl) });
    }
    if config.rollouts == 0 {
        return Err(IrlError::InvalidConfig { field: "rollouts", reason: "must be at least 1".into() });
    }
    let sid = scenario.id();
    if let Some(t) = expert_trajs.iter().find(|t| t.scenario_id != sid) {
        return Err(IrlError::ScenarioMismatch { expected: sid, found: t.scenario_id.clone() });
    }
    let gamma = learner.gamma();
    let mu_expert = trajectories::feature_expectation(expert_trajs, gamma)?;

    let horizon = if gamma < 1.0 { 1.0 / (1.0 - gamma) } else { scenario.dist_limit as f64 };
    let mut seed_rng = seed::rng_for(master_seed, "irl_seed_mu", 0);
    let seed_mu: FeatureExpectation = std::array::from_fn(|_| seed_rng.gen_range(0.0..=horizon));
    let mut learner_mus = vec![seed_mu];

    let mut log = Vec::new();
    let mut best: Option<(f64, usize, RewardWeights, PolicyModel, TrainingStats)> = None;
    let mut termination = Termination::MaxIters;

    for iter in 0..config.max_iters {
        let qp = solve_min_norm_svm(&mu_expert, &learner_mus)?;
        if qp.status == QpStatus::Infeasible {
            termination = Termination::Infeasible;
            break;
        }
        let w = normalize_weights(&qp.w)?;
        let (policy, stats) = learner.train(scenario, &w, seed::derive_seed(master_seed, "irl_train", iter as u64))?;
        let mu = estimate_feature_expectation(scenario, &policy, gamma, config.rollouts, master_seed, iter as u64)?;
        learner_mus.push(mu);
        let entry = IrlIterationLog {
            iter,
            w,
            mu,
            hyper_distance: hyper_distance(&w, &mu, &mu_expert),
            l2_gap: l2_gap(&mu, &mu_expert),
        };
        iteration_hook(&entry);
        let d = entry.hyper_distance;
        log.push(entry);
        if best.as_ref().is_none_or(|(b, ..)| d < *b) {
            best = Some((d, iter, w, policy, stats));
        }
        if d < config.eps_irl {
            termination = Termination::Converged;
            break;
        }
    }

    let (_, best_iter, weights, policy, training_stats) = best.ok_or(IrlError::NoPolicy)?;
    Ok(IrlOutcome { weights, policy, log, termination, best_iter, mu_expert, training_stats })
}
