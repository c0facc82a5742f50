//! Trained or scripted policies and greedy rollouts.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::bc::{self, DecisionTree};
use crate::dqn::{self, MlpParams};
use crate::lfa::LfaModel;
use crate::seed::Rng;
use crate::trajectories::{StepRecord, Trajectory, TrajectorySource};
use crate::world::{self, Action, CellCoord, Direction, FeatureVector, Scenario, UavState, WorldError};
use crate::world::{NUM_ACTIONS, NUM_POWER_LEVELS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum PolicyModel {
    Lfa(LfaModel),
    Dqn(MlpParams),
    Tree(DecisionTree),
    /// Minimum-hop, minimum-turn path with a random power per hop.
    ShortestPath,
    /// Uniformly random joint action at every hop.
    Random,
    /// A fixed action sequence (e.g. a recorded expert demonstration).
    Scripted(Vec<Action>),
}

impl PolicyModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            PolicyModel::Lfa(_) => "lfa",
            PolicyModel::Dqn(_) => "dqn",
            PolicyModel::Tree(_) => "bc",
            PolicyModel::ShortestPath => "shortest",
            PolicyModel::Random => "random",
            PolicyModel::Scripted(_) => "scripted",
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, PolicyModel::ShortestPath | PolicyModel::Random)
    }
}

/// Per-episode decision state of a policy.
enum Actor<'a> {
    Greedy(&'a PolicyModel),
    Plan(Vec<Direction>),
    Random,
    Fixed(&'a [Action]),
}

impl<'a> Actor<'a> {
    fn new(policy: &'a PolicyModel, scenario: &Scenario, start: CellCoord) -> Actor<'a> {
        match policy {
            PolicyModel::ShortestPath => Actor::Plan(bc::shortest_path_directions(&scenario.grid(), start, scenario.dest_cell)),
            PolicyModel::Random => Actor::Random,
            PolicyModel::Scripted(actions) => Actor::Fixed(actions),
            other => Actor::Greedy(other),
        }
    }

    fn act(&self, obs: &FeatureVector, state: &UavState, rng: &mut Rng) -> Action {
        match self {
            Actor::Greedy(PolicyModel::Lfa(m)) => m.greedy_action(obs),
            Actor::Greedy(PolicyModel::Dqn(p)) => dqn::greedy_action(p, obs),
            Actor::Greedy(PolicyModel::Tree(t)) => t.predict(obs),
            Actor::Greedy(_) => unreachable!("non-greedy models are mapped to other actors"),
            Actor::Plan(dirs) => {
                let dir = dirs.get(state.hops_used as usize).copied().unwrap_or(Direction::N);
                let power = rng.gen_range(0..NUM_POWER_LEVELS) as u8;
                Action::new(dir, power).expect("power index in range")
            }
            Actor::Random => Action::from_index(rng.gen_range(0..NUM_ACTIONS)).expect("index in range"),
            Actor::Fixed(actions) => actions
                .get(state.hops_used as usize)
                .copied()
                .unwrap_or(Action { move_dir: Direction::N, power_idx: 0 }),
        }
    }
}

/// Runs one episode from `start` until the destination is reached or the hop
/// budget is spent.
pub fn rollout(
    scenario: &Scenario,
    policy: &PolicyModel,
    start: CellCoord,
    rng: &mut Rng,
) -> Result<Trajectory, WorldError> {
    let actor = Actor::new(policy, scenario, start);
    let mut state = UavState::start(start);
    let mut obs = world::initial_observation(scenario, start);
    let mut steps = Vec::new();
    while !state.done {
        let action = actor.act(&obs, &state, rng);
        let out = world::step(scenario, &state, action)?;
        steps.push(StepRecord {
            t: state.hops_used,
            cell: out.state.cell,
            action,
            features: out.features,
            throughput_bps: out.metrics.throughput_bps,
            interference_w: out.metrics.interference_w,
            done: out.state.done,
        });
        obs = out.features;
        state = out.state;
    }
    Ok(Trajectory {
        scenario_id: scenario.id(),
        source: TrajectorySource::Policy(policy.kind_name().to_string()),
        start_cell: start,
        steps,
    })
}
