//! Fixtures for the kernel benchmarks, built from seeded rollouts so every
//! benchmark sees the same inputs.

use uavirl_core::bc::{self, LabeledSample};
use uavirl_core::policy::{self, PolicyModel};
use uavirl_core::seed::rng_for;
use uavirl_core::trajectories::{discounted_feature_sum, Trajectory};
use uavirl_core::world::build_scenario;
use uavirl_core::{Scenario, ScenarioConfig};

pub const SEED: u64 = 42;

pub fn default_scenario() -> Scenario {
    build_scenario(&ScenarioConfig::default(), SEED).expect("default scenario builds")
}

/// `n` uniformly random episodes from the source.
pub fn random_episodes(sc: &Scenario, n: usize) -> Vec<Trajectory> {
    (0..n)
        .map(|i| {
            let mut rng = rng_for(SEED, "bench-rollout", i as u64);
            policy::rollout(sc, &PolicyModel::Random, sc.source_cell, &mut rng).expect("rollout")
        })
        .collect()
}

/// Observation/action pairs from random episodes; many distinct labels.
pub fn tree_dataset(sc: &Scenario, episodes: usize) -> Vec<LabeledSample> {
    bc::bc_dataset(sc, &random_episodes(sc, episodes))
}

/// Expert and learner feature expectations for a separating QP with
/// `learners` constraints besides the expert's.
pub fn qp_instance(sc: &Scenario, learners: usize) -> ([f64; 5], Vec<[f64; 5]>) {
    let expert = bc::scripted_expert(sc, &Default::default(), 1).expect("expert")[0].clone();
    let mu_e = discounted_feature_sum(&expert, 0.99).expect("non-empty");
    let mu_l = random_episodes(sc, learners).iter().map(|t| discounted_feature_sum(t, 0.99).expect("non-empty")).collect();
    (mu_e, mu_l)
}

/// Observations visited by random episodes, for network inputs.
pub fn observations(sc: &Scenario, n: usize) -> Vec<Vec<f64>> {
    random_episodes(sc, n).iter().flat_map(|t| t.steps.iter().map(|s| s.features.0.to_vec())).take(n).collect()
}
