//! Behavioural cloning and the non-learning baselines.

pub mod expert;
pub mod tree;

use rand::seq::SliceRandom;
use thiserror::Error;

pub use expert::{expert_actions, expert_path, path_cost, scripted_expert, ExpertOracleConfig};
pub use tree::{evaluate_bc, fit_tree, DecisionTree, LabeledSample, Node};

use crate::seed;
use crate::trajectories::Trajectory;
use crate::world::{self, hex_distance, CellCoord, Direction, Grid, Scenario, WorldError};

#[derive(Debug, Error)]
pub enum BcError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("label {0} is not a joint action")]
    InvalidLabel(usize),
    #[error("malformed decision tree: {0}")]
    MalformedTree(String),
    #[error("invalid expert config: {0}")]
    InvalidConfig(String),
    #[error("no route within the hop budget keeps throughput above {threshold_bps} bit/s")]
    NoFeasiblePath { threshold_bps: f64 },
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Pairs every recorded action with the observation it was chosen from:
/// the start observation for the first step, then the previous step's
/// features.
pub fn bc_dataset(scenario: &Scenario, trajs: &[Trajectory]) -> Vec<LabeledSample> {
    let mut out = Vec::new();
    for t in trajs {
        let mut obs = world::initial_observation(scenario, t.start_cell);
        for s in &t.steps {
            out.push((obs, s.action.index()));
            obs = s.features;
        }
    }
    out
}

/// Shuffles with a seeded RNG and cuts off the first `train_frac` for
/// training.
pub fn split_dataset(data: &[LabeledSample], train_frac: f64, split_seed: u64) -> (Vec<LabeledSample>, Vec<LabeledSample>) {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut seed::rng_for(split_seed, "bc_split", 0));
    let cut = ((data.len() as f64) * train_frac).round() as usize;
    let (a, b) = idx.split_at(cut.min(data.len()));
    (a.iter().map(|&i| data[i]).collect(), b.iter().map(|&i| data[i]).collect())
}

fn turns(dirs: &[Direction]) -> usize {
    dirs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Minimum-hop route from `start` to `dest`; among those, the fewest heading
/// changes, then the lexicographically smallest direction sequence.
pub fn shortest_path_directions(grid: &Grid, start: CellCoord, dest: CellCoord) -> Vec<Direction> {
    fn walk(grid: &Grid, at: CellCoord, dest: CellCoord, cur: &mut Vec<Direction>, best: &mut Option<Vec<Direction>>) {
        if at == dest {
            let better = match best {
                None => true,
                Some(b) => {
                    let key = |d: &[Direction]| (turns(d), d.iter().map(|x| x.index()).collect::<Vec<_>>());
                    key(cur) < key(b)
                }
            };
            if better {
                *best = Some(cur.clone());
            }
            return;
        }
        let d = hex_distance(at, dest);
        for (dir, next) in grid.neighbors(at) {
            if hex_distance(next, dest) + 1 == d {
                cur.push(dir);
                walk(grid, next, dest, cur, best);
                cur.pop();
            }
        }
    }
    let mut best = None;
    walk(grid, start, dest, &mut Vec::new(), &mut best);
    best.unwrap_or_default()
}
