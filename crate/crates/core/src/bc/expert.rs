//! Scripted expert: the cheapest hop-limited route where each hop costs its
//! normalised neighbour interference plus a fixed hop penalty, flown at the
//! lowest power that still meets the throughput target.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::BcError;
use crate::policy::{self, PolicyModel};
use crate::seed;
use crate::trajectories::{Trajectory, TrajectorySource};
use crate::world::{self, Action, CellCoord, Direction, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpertOracleConfig {
    pub interference_weight: f64,
    pub hop_weight: f64,
    /// Overrides the scenario's throughput target when set.
    pub throughput_threshold_bps: Option<f64>,
}

impl Default for ExpertOracleConfig {
    fn default() -> Self {
        ExpertOracleConfig { interference_weight: 1.0, hop_weight: 0.1, throughput_threshold_bps: None }
    }
}

impl ExpertOracleConfig {
    pub fn validate(&self) -> Result<(), BcError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.interference_weight) || !ok(self.hop_weight) {
            return Err(BcError::InvalidConfig("expert weights must be finite and non-negative".into()));
        }
        if self.interference_weight == 0.0 && self.hop_weight == 0.0 {
            return Err(BcError::InvalidConfig("expert weights cannot both be zero".into()));
        }
        Ok(())
    }

    pub fn threshold(&self, scenario: &Scenario) -> f64 {
        self.throughput_threshold_bps.unwrap_or(scenario.throughput_threshold_bps)
    }
}

/// Lowest power index meeting the throughput target in each cell, or `None`
/// where no level does.
pub fn power_choices(scenario: &Scenario, threshold_bps: f64) -> Result<Vec<Option<u8>>, BcError> {
    let mut out = Vec::with_capacity(scenario.num_cells());
    for cell in scenario.grid().cells() {
        let mut pick = None;
        for (i, &p) in scenario.power_levels_w.iter().enumerate() {
            if world::link_metrics(scenario, cell, p)?.throughput_bps >= threshold_bps {
                pick = Some(i as u8);
                break;
            }
        }
        out.push(pick);
    }
    Ok(out)
}

/// Cost of entering `cell` at power index `power_idx`.
pub fn hop_cost(scenario: &Scenario, config: &ExpertOracleConfig, cell: CellCoord, power_idx: u8) -> Result<f64, BcError> {
    let p = scenario.power_levels_w[power_idx as usize];
    let i = world::aggregate_interference(scenario, cell, p)?;
    Ok(config.interference_weight * i / scenario.norm.i_max_w + config.hop_weight)
}

/// Total cost of a cell sequence that starts at the source (not charged).
pub fn path_cost(scenario: &Scenario, config: &ExpertOracleConfig, path: &[CellCoord]) -> Result<f64, BcError> {
    let powers = power_choices(scenario, config.threshold(scenario))?;
    let mut total = 0.0;
    for &c in path.iter().skip(1) {
        let p = powers[scenario.cell_index(c)].ok_or(BcError::NoFeasiblePath { threshold_bps: config.threshold(scenario) })?;
        total += hop_cost(scenario, config, c, p)?;
    }
    Ok(total)
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    hops: u32,
    cell: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: reverse for smallest (cost, hops, cell) first
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.hops.cmp(&self.hops))
            .then(other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cheapest source-to-destination cell sequence (source first) within the
/// scenario's hop budget, with its cost.
pub fn expert_path(scenario: &Scenario, config: &ExpertOracleConfig) -> Result<(Vec<CellCoord>, f64), BcError> {
    config.validate()?;
    let threshold = config.threshold(scenario);
    let powers = power_choices(scenario, threshold)?;
    let grid = scenario.grid();
    let n = grid.len();
    let limit = scenario.dist_limit as usize;
    let src = scenario.cell_index(scenario.source_cell);
    let dst = scenario.cell_index(scenario.dest_cell);

    let mut entry_cost = vec![None; n];
    for (i, p) in powers.iter().enumerate() {
        if let Some(p) = p {
            entry_cost[i] = Some(hop_cost(scenario, config, grid.cell(i).expect("in range"), *p)?);
        }
    }

    // layered states (cell, hops)
    let state = |cell: usize, hops: usize| hops * n + cell;
    let mut best = vec![f64::INFINITY; n * (limit + 1)];
    let mut prev: Vec<Option<usize>> = vec![None; n * (limit + 1)];
    let mut heap = BinaryHeap::new();
    best[state(src, 0)] = 0.0;
    heap.push(Entry { cost: 0.0, hops: 0, cell: src });
    while let Some(Entry { cost, hops, cell }) = heap.pop() {
        let h = hops as usize;
        if cost > best[state(cell, h)] {
            continue;
        }
        if cell == dst && h > 0 {
            let mut path = vec![grid.cell(cell).expect("in range")];
            let mut at = state(cell, h);
            while let Some(p) = prev[at] {
                path.push(grid.cell(p % n).expect("in range"));
                at = p;
            }
            path.reverse();
            return Ok((path, cost));
        }
        if h == limit {
            continue;
        }
        let here = grid.cell(cell).expect("in range");
        for (_, next) in grid.neighbors(here) {
            let ni = grid.index_of(next).expect("neighbour on grid");
            let Some(step) = entry_cost[ni] else { continue };
            let c = cost + step;
            let s = state(ni, h + 1);
            if c < best[s] {
                best[s] = c;
                prev[s] = Some(state(cell, h));
                heap.push(Entry { cost: c, hops: hops + 1, cell: ni });
            }
        }
    }
    Err(BcError::NoFeasiblePath { threshold_bps: threshold })
}

/// Joint actions that fly [`expert_path`].
pub fn expert_actions(scenario: &Scenario, config: &ExpertOracleConfig) -> Result<Vec<Action>, BcError> {
    let (path, _) = expert_path(scenario, config)?;
    let powers = power_choices(scenario, config.threshold(scenario))?;
    path.windows(2)
        .map(|w| {
            let dir = Direction::between(w[0], w[1]).expect("path cells are adjacent");
            let p = powers[scenario.cell_index(w[1])].expect("path cells are passable");
            Ok(Action::new(dir, p)?)
        })
        .collect()
}

/// `n_trajs` copies of the expert's demonstration.
pub fn scripted_expert(scenario: &Scenario, config: &ExpertOracleConfig, n_trajs: usize) -> Result<Vec<Trajectory>, BcError> {
    let actions = expert_actions(scenario, config)?;
    let mut rng = seed::rng_for(scenario.seed, "expert", 0);
    let mut traj = policy::rollout(scenario, &PolicyModel::Scripted(actions), scenario.source_cell, &mut rng)?;
    traj.source = TrajectorySource::ScriptedExpert;
    Ok(vec![traj; n_trajs])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bc::shortest_path_directions;
    use crate::world::{build_scenario, hex_distance, ScenarioConfig};

    #[test]
    fn empty_map_gives_shortest_route() {
        let cfg = ScenarioConfig::default().with_uniform_density(0);
        let sc = build_scenario(&cfg, 1).unwrap();
        let (path, cost) = expert_path(&sc, &ExpertOracleConfig::default()).unwrap();
        let d = hex_distance(sc.source_cell, sc.dest_cell) as usize;
        assert_eq!(path.len(), d + 1);
        assert!((cost - 0.1 * d as f64).abs() < 1e-12);
    }

    #[test]
    fn expert_no_worse_than_straight_route() {
        let sc = build_scenario(&ScenarioConfig::default(), 1).unwrap();
        let oc = ExpertOracleConfig::default();
        let (_, cost) = expert_path(&sc, &oc).unwrap();
        let mut straight = vec![sc.source_cell];
        for d in shortest_path_directions(&sc.grid(), sc.source_cell, sc.dest_cell) {
            straight.push(sc.grid().neighbor(*straight.last().unwrap(), d));
        }
        assert!(cost <= path_cost(&sc, &oc, &straight).unwrap() + 1e-12);
    }

    #[test]
    fn expert_meets_throughput_target() {
        let sc = build_scenario(&ScenarioConfig::default(), 1).unwrap();
        let trajs = scripted_expert(&sc, &ExpertOracleConfig::default(), 3).unwrap();
        assert_eq!(trajs.len(), 3);
        for t in &trajs {
            t.validate_against(&sc).unwrap();
            assert_eq!(t.final_cell(), sc.dest_cell);
            assert!(t.steps.iter().all(|s| s.throughput_bps >= sc.throughput_threshold_bps));
            assert_eq!(t.source, TrajectorySource::ScriptedExpert);
        }
    }

    #[test]
    fn unreachable_target_reported() {
        let sc = build_scenario(&ScenarioConfig::default(), 1).unwrap();
        let oc = ExpertOracleConfig { throughput_threshold_bps: Some(1e12), ..Default::default() };
        assert!(matches!(expert_path(&sc, &oc), Err(BcError::NoFeasiblePath { .. })));
    }

    #[test]
    fn zero_weights_rejected() {
        let sc = build_scenario(&ScenarioConfig::default(), 1).unwrap();
        let oc = ExpertOracleConfig { interference_weight: 0.0, hop_weight: 0.0, ..Default::default() };
        assert!(matches!(expert_path(&sc, &oc), Err(BcError::InvalidConfig(_))));
    }
}
