//! Hex-grid MDP: a UAV hops between cells toward a destination while picking
//! one of six uplink transmit powers at every hop.

pub mod hex;
pub mod scenario;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, ChannelError, LinkGeometry};

pub use hex::{cell_center, hex_distance, CellCoord, Direction, Grid};
pub use scenario::{build_scenario, FeatureNorm, GroundPoint, Scenario, ScenarioConfig, DEFAULT_DENSITY_MAP};

pub const NUM_FEATURES: usize = 5;
pub const NUM_POWER_LEVELS: usize = 6;
pub const NUM_ACTIONS: usize = 36;

/// Height of terrestrial UE antennas for the UE-to-BS ground link.
pub const UE_HEIGHT_M: f64 = 1.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("invalid scenario field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("episode already finished; reset before stepping")]
    EpisodeDone,
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("malformed scenario document: {0}")]
    Parse(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub move_dir: Direction,
    pub power_idx: u8,
}

impl Action {
    pub fn new(move_dir: Direction, power_idx: u8) -> Result<Action, WorldError> {
        if (power_idx as usize) < NUM_POWER_LEVELS {
            Ok(Action { move_dir, power_idx })
        } else {
            Err(WorldError::InvalidAction(format!("power index {power_idx} is not in 0..6")))
        }
    }

    pub fn from_index(i: usize) -> Result<Action, WorldError> {
        if i >= NUM_ACTIONS {
            return Err(WorldError::InvalidAction(format!("joint action {i} is not in 0..36")));
        }
        Ok(Action {
            move_dir: Direction::ALL[i / NUM_POWER_LEVELS],
            power_idx: (i % NUM_POWER_LEVELS) as u8,
        })
    }

    pub fn index(self) -> usize {
        self.move_dir.index() * NUM_POWER_LEVELS + self.power_idx as usize
    }
}

/// Five normalised state features: distance to destination, hops used,
/// success flag, uplink throughput, interference on neighbouring UEs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [f64; NUM_FEATURES]);

impl FeatureVector {
    pub fn as_array(&self) -> &[f64; NUM_FEATURES] {
        &self.0
    }

    pub fn dot(&self, w: &[f64; NUM_FEATURES]) -> f64 {
        self.0.iter().zip(w).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UavState {
    pub cell: CellCoord,
    pub hops_used: u32,
    pub done: bool,
}

impl UavState {
    pub fn start(cell: CellCoord) -> Self {
        UavState { cell, hops_used: 0, done: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub throughput_bps: f64,
    pub interference_w: f64,
    pub serving_bs: usize,
    pub snr: f64,
    pub hex_dist_to_dest: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: UavState,
    pub features: FeatureVector,
    pub metrics: StepMetrics,
}

/// Aggregate UAV interference on the UEs of the adjacent cells. Each UE of
/// neighbour cell `n` sees `P * h(uav -> BS_n)`; the UAV's own cell is spared.
pub fn aggregate_interference(scenario: &Scenario, cell: CellCoord, tx_power_w: f64) -> Result<f64, WorldError> {
    let grid = scenario.grid();
    let mut total = 0.0;
    for (_, n) in grid.neighbors(cell) {
        let count = scenario.ue_count(n);
        if count == 0 {
            continue;
        }
        let gain = scenario.uav_bs_gain(cell, n)?;
        total += count as f64 * channel::interference_contribution(tx_power_w, gain);
    }
    Ok(total)
}

/// Link metrics of the UAV transmitting at `tx_power_w` from `cell` to the
/// cell's own BS.
pub fn link_metrics(scenario: &Scenario, cell: CellCoord, tx_power_w: f64) -> Result<StepMetrics, WorldError> {
    let gain = scenario.uav_bs_gain(cell, cell)?;
    Ok(StepMetrics {
        throughput_bps: channel::throughput(tx_power_w, gain, &scenario.channel),
        interference_w: aggregate_interference(scenario, cell, tx_power_w)?,
        serving_bs: scenario.cell_index(cell),
        snr: channel::snr_uplink(tx_power_w, gain, &scenario.channel),
        hex_dist_to_dest: hex_distance(cell, scenario.dest_cell),
    })
}

pub fn compute_features(scenario: &Scenario, state: &UavState, metrics: &StepMetrics) -> FeatureVector {
    let norm = &scenario.norm;
    FeatureVector([
        metrics.hex_dist_to_dest as f64 / norm.d_max as f64,
        state.hops_used as f64 / scenario.dist_limit as f64,
        if state.cell == scenario.dest_cell { 1.0 } else { 0.0 },
        (metrics.throughput_bps / norm.t_max_bps).min(1.0),
        (metrics.interference_w / norm.i_max_w).min(1.0),
    ])
}

/// Features observed before the first move: only the distance is non-zero.
pub fn initial_observation(scenario: &Scenario, start: CellCoord) -> FeatureVector {
    let d = hex_distance(start, scenario.dest_cell) as f64 / scenario.norm.d_max as f64;
    FeatureVector([d, 0.0, 0.0, 0.0, 0.0])
}

pub fn step(scenario: &Scenario, state: &UavState, action: Action) -> Result<StepOutcome, WorldError> {
    if state.done {
        return Err(WorldError::EpisodeDone);
    }
    let power = *scenario
        .power_levels_w
        .get(action.power_idx as usize)
        .ok_or_else(|| WorldError::InvalidAction(format!("power index {}", action.power_idx)))?;
    let cell = scenario.grid().neighbor(state.cell, action.move_dir);
    let hops_used = state.hops_used + 1;
    let done = cell == scenario.dest_cell || hops_used >= scenario.dist_limit;
    let next = UavState { cell, hops_used, done };
    let metrics = link_metrics(scenario, cell, power)?;
    let features = compute_features(scenario, &next, &metrics);
    Ok(StepOutcome { state: next, features, metrics })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeLink {
    pub cell_index: usize,
    pub ue_index: usize,
    pub sinr: f64,
    pub throughput_bps: f64,
}

/// SINR and rate of every UE in the cells adjacent to the UAV.
pub fn ue_link_report(scenario: &Scenario, cell: CellCoord, tx_power_w: f64) -> Result<Vec<UeLink>, WorldError> {
    let mut out = Vec::new();
    for (_, n) in scenario.grid().neighbors(cell) {
        let ni = scenario.cell_index(n);
        let interference = channel::interference_contribution(tx_power_w, scenario.uav_bs_gain(cell, n)?);
        let bs = scenario.bs_positions[ni];
        for (ui, ue) in scenario.ue_placements[ni].iter().enumerate() {
            let geom = LinkGeometry::new(ue.distance(&bs), UE_HEIGHT_M);
            let h_u = channel::channel_gain(channel::pathloss_nlos(&geom, &scenario.channel)?, 1.0);
            let (sinr, throughput_bps) =
                channel::ue_sinr_throughput(scenario.channel.ue_tx_power_w, h_u, interference, &scenario.channel);
            out.push(UeLink { cell_index: ni, ue_index: ui, sinr, throughput_bps });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelMode;
    use rand::{Rng, SeedableRng};

    fn default_scenario() -> Scenario {
        build_scenario(&ScenarioConfig::default(), 42).unwrap()
    }

    #[test]
    fn joint_action_index_round_trip() {
        for i in 0..NUM_ACTIONS {
            assert_eq!(Action::from_index(i).unwrap().index(), i);
        }
        assert!(Action::from_index(36).is_err());
        assert!(Action::new(Direction::N, 6).is_err());
    }

    #[test]
    fn reaching_destination_sets_success_flag() {
        let sc = default_scenario();
        let grid = sc.grid();
        let (dir, from) = grid
            .neighbors(sc.dest_cell)
            .map(|(d, n)| (d.opposite(), n))
            .next()
            .unwrap();
        let out = step(&sc, &UavState { cell: from, hops_used: 3, done: false }, Action::new(dir, 2).unwrap()).unwrap();
        assert!(out.state.done);
        assert_eq!(out.state.cell, sc.dest_cell);
        assert_eq!(out.features.0[2], 1.0);
        assert_eq!(out.features.0[0], 0.0);
    }

    #[test]
    fn hop_budget_exhaustion_ends_unsuccessfully() {
        let sc = default_scenario();
        let s = UavState { cell: sc.source_cell, hops_used: sc.dist_limit - 1, done: false };
        let out = step(&sc, &s, Action::new(Direction::N, 0).unwrap()).unwrap();
        assert!(out.state.done);
        assert_eq!(out.features.0[2], 0.0);
        assert_eq!(out.features.0[1], 1.0);
    }

    #[test]
    fn stepping_a_finished_episode_is_an_error() {
        let sc = default_scenario();
        let s = UavState { cell: sc.source_cell, hops_used: 2, done: true };
        assert_eq!(step(&sc, &s, Action::from_index(0).unwrap()), Err(WorldError::EpisodeDone));
    }

    #[test]
    fn more_power_means_more_rate_and_interference() {
        let sc = default_scenario();
        let s = UavState::start(sc.source_cell);
        for d in Direction::ALL {
            let lo = step(&sc, &s, Action::new(d, 0).unwrap()).unwrap();
            let hi = step(&sc, &s, Action::new(d, 5).unwrap()).unwrap();
            assert!(hi.metrics.throughput_bps > lo.metrics.throughput_bps);
            if lo.metrics.interference_w > 0.0 {
                assert!(hi.metrics.interference_w > lo.metrics.interference_w);
            }
        }
    }

    #[test]
    fn interference_edge_cases() {
        let cfg = ScenarioConfig::default().with_uniform_density(0);
        let empty = build_scenario(&cfg, 1).unwrap();
        let c = CellCoord::from_offset(2, 2);
        assert_eq!(aggregate_interference(&empty, c, 0.2).unwrap(), 0.0);
        let sc = default_scenario();
        assert_eq!(aggregate_interference(&sc, c, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn single_neighbor_with_three_ues() {
        let mut counts = vec![0; 25];
        counts[1] = 3;
        let cfg = ScenarioConfig { ue_count_per_cell: counts, ..Default::default() };
        let sc = build_scenario(&cfg, 1).unwrap();
        let src = sc.source_cell;
        let n = sc.grid().cell(1).unwrap();
        let per_ue = 0.2 * sc.uav_bs_gain(src, n).unwrap();
        let total = aggregate_interference(&sc, src, 0.2).unwrap();
        assert!((total - 3.0 * per_ue).abs() <= 1e-15 * total);
    }

    #[test]
    fn features_at_destination_with_full_budget() {
        let sc = default_scenario();
        let state = UavState { cell: sc.dest_cell, hops_used: sc.dist_limit, done: true };
        let m = link_metrics(&sc, sc.dest_cell, 0.0).unwrap();
        let phi = compute_features(&sc, &state, &m);
        assert_eq!(phi.0[..3], [0.0, 1.0, 1.0]);
        assert_eq!(phi.0[3], 0.0);
        assert_eq!(phi.0[4], 0.0);
    }

    #[test]
    fn exhaustive_feature_bounds() {
        for mode in [ChannelMode::Probabilistic, ChannelMode::LosOnly] {
            let sc = default_scenario().with_channel_mode(mode).unwrap();
            for cell in sc.grid().cells() {
                for hops in 0..sc.dist_limit {
                    for a in 0..NUM_ACTIONS {
                        let s = UavState { cell, hops_used: hops, done: false };
                        let out = step(&sc, &s, Action::from_index(a).unwrap()).unwrap();
                        for (k, v) in out.features.0.iter().enumerate() {
                            assert!((0.0..=1.0).contains(v), "phi[{k}] = {v}");
                        }
                        assert!(out.features.0[2] == 0.0 || out.features.0[2] == 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn random_walks_stay_on_grid_and_terminate() {
        let sc = default_scenario();
        let grid = sc.grid();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let mut s = UavState::start(sc.source_cell);
            let mut steps = 0;
            while !s.done {
                let a = Action::from_index(rng.gen_range(0..NUM_ACTIONS)).unwrap();
                let out = step(&sc, &s, a).unwrap();
                assert_eq!(out.state.hops_used, s.hops_used + 1);
                assert!(grid.contains(out.state.cell));
                s = out.state;
                steps += 1;
            }
            assert!(steps <= sc.dist_limit);
        }
    }

    #[test]
    fn off_grid_move_consumes_a_hop() {
        let sc = default_scenario();
        let s = UavState::start(sc.source_cell);
        let out = step(&sc, &s, Action::new(Direction::S, 0).unwrap()).unwrap();
        assert_eq!(out.state.cell, sc.source_cell);
        assert_eq!(out.state.hops_used, 1);
    }

    #[test]
    fn ue_report_edge_cases() {
        let sc = default_scenario();
        let c = CellCoord::from_offset(2, 2);
        let free = ue_link_report(&sc, c, 0.0).unwrap();
        let loud = ue_link_report(&sc, c, 0.2).unwrap();
        assert_eq!(free.len(), loud.len());
        let expected: u32 = sc.grid().neighbors(c).map(|(_, n)| sc.ue_count(n)).sum();
        assert_eq!(free.len(), expected as usize);
        for (f, l) in free.iter().zip(&loud) {
            assert!(l.sinr < f.sinr);
        }
    }

    #[test]
    fn single_ue_report_matches_hand_composition() {
        let mut counts = vec![0; 25];
        counts[1] = 1;
        let cfg = ScenarioConfig { ue_count_per_cell: counts, ..Default::default() };
        let sc = build_scenario(&cfg, 3).unwrap();
        let report = ue_link_report(&sc, sc.source_cell, 0.11).unwrap();
        assert_eq!(report.len(), 1);

        let n = sc.grid().cell(1).unwrap();
        let bs = sc.bs_positions[1];
        let ue = sc.ue_placements[1][0];
        let d_h = ((ue.x - bs.x).powi(2) + (ue.y - bs.y).powi(2)).sqrt();
        let slant = (d_h * d_h + UE_HEIGHT_M * UE_HEIGHT_M).sqrt();
        let pl = 20.0 * slant.log10() + 20.0 * 2e9f64.log10() - 147.55 + 23.0;
        let h_u = 10f64.powf(-pl / 10.0);
        let interference = 0.11 * sc.uav_bs_gain(sc.source_cell, n).unwrap();
        let (sinr, rate) = channel::ue_sinr_throughput(0.002, h_u, interference, &sc.channel);
        assert!((report[0].sinr - sinr).abs() <= 1e-12 * sinr);
        assert!((report[0].throughput_bps - rate).abs() <= 1e-9 * rate);
    }

    #[test]
    fn step_is_deterministic() {
        let sc = default_scenario();
        let s = UavState::start(sc.source_cell);
        let a = Action::from_index(9).unwrap();
        assert_eq!(step(&sc, &s, a).unwrap(), step(&sc, &s, a).unwrap());
    }
}
