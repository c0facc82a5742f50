//! Interactive demonstration sessions and policy playback, independent of
//! any transport. A human steps the simulator one joint action at a time;
//! finished episodes are persisted in the standard trajectory format.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, ChannelMode};
use crate::harness::{self, PolicyArtifact};
use crate::policy;
use crate::trajectories::{StepRecord, Trajectory, TrajectoryError, TrajectorySource, TrajectoryStore};
use crate::world::{self, hex_distance, Action, CellCoord, Direction, FeatureVector, GroundPoint, Scenario, UavState, WorldError};

pub const DEMO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("no scenario `{0}`")]
    ScenarioNotFound(String),
    #[error("no session `{0}`")]
    SessionNotFound(String),
    #[error("no policy `{0}`")]
    PolicyNotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Validation(String),
    #[error("policy {policy} was trained on scenario {found}, not {expected}")]
    ScenarioMismatch { policy: String, expected: String, found: String },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellView {
    pub cell: CellCoord,
    pub col: i32,
    pub row: i32,
    pub bs: GroundPoint,
    pub ue_count: u32,
    pub ues: Vec<GroundPoint>,
    pub neighbors: Vec<(Direction, CellCoord)>,
}

/// Everything a client needs to draw the board.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioView {
    pub schema_version: u32,
    pub id: String,
    pub grid_cols: u32,
    pub grid_rows: u32,
    pub cell_radius_m: f64,
    pub uav_height_m: f64,
    pub cells: Vec<CellView>,
    pub source_cell: CellCoord,
    pub dest_cell: CellCoord,
    pub power_levels_w: Vec<f64>,
    pub dist_limit: u32,
    pub throughput_threshold_bps: f64,
    pub channel_mode: ChannelMode,
}

impl ScenarioView {
    pub fn new(scenario: &Scenario) -> ScenarioView {
        let grid = scenario.grid();
        let cells = grid
            .cells()
            .map(|c| {
                let i = scenario.cell_index(c);
                let (col, row) = c.to_offset();
                CellView {
                    cell: c,
                    col,
                    row,
                    bs: scenario.bs_positions[i],
                    ue_count: scenario.ue_count_per_cell[i],
                    ues: scenario.ue_placements[i].clone(),
                    neighbors: grid.neighbors(c).collect(),
                }
            })
            .collect();
        ScenarioView {
            schema_version: DEMO_SCHEMA_VERSION,
            id: scenario.id(),
            grid_cols: scenario.grid_cols,
            grid_rows: scenario.grid_rows,
            cell_radius_m: scenario.cell_radius_m,
            uav_height_m: scenario.uav_height_m,
            cells,
            source_cell: scenario.source_cell,
            dest_cell: scenario.dest_cell,
            power_levels_w: scenario.power_levels_w.clone(),
            dist_limit: scenario.dist_limit,
            throughput_threshold_bps: scenario.throughput_threshold_bps,
            channel_mode: scenario.channel.channel_mode,
        }
    }
}

/// Interference the UAV puts on one adjacent cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborLoad {
    pub dir: Direction,
    pub cell: CellCoord,
    pub ue_count: u32,
    pub interference_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepView {
    /// 0-based hop index.
    pub t: u32,
    pub from_cell: CellCoord,
    pub cell: CellCoord,
    pub move_dir: Direction,
    pub power_idx: u8,
    pub power_w: f64,
    pub features: FeatureVector,
    pub throughput_bps: f64,
    pub interference_w: f64,
    pub neighbors: Vec<NeighborLoad>,
    pub hops_used: u32,
    pub hops_remaining: u32,
    pub distance_to_dest: u32,
    /// The move would have left the grid, so the UAV stayed put.
    pub blocked: bool,
    pub done: bool,
    pub reached: bool,
}

fn neighbor_loads(scenario: &Scenario, cell: CellCoord, power_w: f64) -> Result<Vec<NeighborLoad>, WorldError> {
    scenario
        .grid()
        .neighbors(cell)
        .map(|(dir, n)| {
            let ue_count = scenario.ue_count(n);
            let per_ue = channel::interference_contribution(power_w, scenario.uav_bs_gain(cell, n)?);
            Ok(NeighborLoad { dir, cell: n, ue_count, interference_w: ue_count as f64 * per_ue })
        })
        .collect()
}

/// View of one recorded step taken from `from_cell`.
pub fn step_view(scenario: &Scenario, from_cell: CellCoord, rec: &StepRecord) -> Result<StepView, WorldError> {
    let power_w = scenario.power_levels_w[rec.action.power_idx as usize];
    let hops_used = rec.t + 1;
    Ok(StepView {
        t: rec.t,
        from_cell,
        cell: rec.cell,
        move_dir: rec.action.move_dir,
        power_idx: rec.action.power_idx,
        power_w,
        features: rec.features,
        throughput_bps: rec.throughput_bps,
        interference_w: rec.interference_w,
        neighbors: neighbor_loads(scenario, rec.cell, power_w)?,
        hops_used,
        hops_remaining: scenario.dist_limit.saturating_sub(hops_used),
        distance_to_dest: hex_distance(rec.cell, scenario.dest_cell),
        blocked: rec.cell == from_cell,
        done: rec.done,
        reached: rec.cell == scenario.dest_cell,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Done,
    Finalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub schema_version: u32,
    pub id: String,
    pub scenario_id: String,
    pub status: SessionStatus,
    pub state: UavState,
    /// What a policy would observe now.
    pub observation: FeatureVector,
    pub distance_to_dest: u32,
    pub hops_remaining: u32,
    pub steps: Vec<StepView>,
    pub trajectory_id: Option<String>,
    pub created_at_ms: u64,
    pub last_active_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutView {
    pub schema_version: u32,
    pub policy_id: String,
    pub scenario_id: String,
    pub start_cell: CellCoord,
    pub frames: Vec<StepView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub id: String,
    pub learner: harness::LearnerKind,
    pub scenario_id: String,
    pub deterministic: bool,
}

struct Session {
    id: String,
    scenario: Arc<Scenario>,
    state: UavState,
    observation: FeatureVector,
    steps: Vec<StepRecord>,
    views: Vec<StepView>,
    trajectory_id: Option<String>,
    created_at_ms: u64,
    last_active_ms: u64,
}

impl Session {
    fn status(&self) -> SessionStatus {
        match (self.trajectory_id.is_some(), self.state.done) {
            (true, _) => SessionStatus::Finalized,
            (false, true) => SessionStatus::Done,
            (false, false) => SessionStatus::Active,
        }
    }

    fn view(&self) -> SessionView {
        SessionView {
            schema_version: DEMO_SCHEMA_VERSION,
            id: self.id.clone(),
            scenario_id: self.scenario.id(),
            status: self.status(),
            state: self.state,
            observation: self.observation,
            distance_to_dest: hex_distance(self.state.cell, self.scenario.dest_cell),
            hops_remaining: self.scenario.dist_limit.saturating_sub(self.state.hops_used),
            steps: self.views.clone(),
            trajectory_id: self.trajectory_id.clone(),
            created_at_ms: self.created_at_ms,
            last_active_ms: self.last_active_ms,
        }
    }

    fn trajectory(&self) -> Trajectory {
        Trajectory {
            scenario_id: self.scenario.id(),
            source: TrajectorySource::HumanExpert,
            start_cell: self.scenario.source_cell,
            steps: self.steps.clone(),
        }
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

/// Registry of scenarios and policies plus the live sessions. Steps on one
/// session are serialised by its own lock; different sessions never
/// contend beyond the brief map lookup.
pub struct SessionManager {
    scenarios: BTreeMap<String, Arc<Scenario>>,
    aliases: BTreeMap<String, String>,
    policies: BTreeMap<String, Arc<PolicyArtifact>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    store: TrajectoryStore,
}

impl SessionManager {
    pub fn new(store: TrajectoryStore) -> SessionManager {
        SessionManager {
            scenarios: BTreeMap::new(),
            aliases: BTreeMap::new(),
            policies: BTreeMap::new(),
            sessions: RwLock::new(HashMap::new()),
            store,
        }
    }

    /// Registers a scenario under its content id and, optionally, a
    /// friendly alias. Returns the id.
    pub fn add_scenario(&mut self, alias: Option<&str>, scenario: Scenario) -> String {
        let id = scenario.id();
        if let Some(a) = alias {
            self.aliases.insert(a.to_string(), id.clone());
        }
        self.scenarios.insert(id.clone(), Arc::new(scenario));
        id
    }

    pub fn add_policy(&mut self, artifact: PolicyArtifact) -> Result<(), DemoError> {
        if !self.scenarios.contains_key(&artifact.scenario_id) {
            return Err(DemoError::ScenarioNotFound(artifact.scenario_id.clone()));
        }
        self.policies.insert(artifact.id.clone(), Arc::new(artifact));
        Ok(())
    }

    pub fn store(&self) -> &TrajectoryStore {
        &self.store
    }

    pub fn scenario(&self, reference: &str) -> Result<Arc<Scenario>, DemoError> {
        let id = self.aliases.get(reference).map(String::as_str).unwrap_or(reference);
        self.scenarios.get(id).cloned().ok_or_else(|| DemoError::ScenarioNotFound(reference.to_string()))
    }

    pub fn scenario_ids(&self) -> Vec<String> {
        self.scenarios.keys().cloned().collect()
    }

    pub fn policies(&self) -> Vec<PolicySummary> {
        self.policies
            .values()
            .map(|a| PolicySummary {
                id: a.id.clone(),
                learner: a.learner,
                scenario_id: a.scenario_id.clone(),
                deterministic: a.policy.is_deterministic(),
            })
            .collect()
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, DemoError> {
        let map = self.sessions.read().expect("session map lock poisoned");
        map.get(id).cloned().ok_or_else(|| DemoError::SessionNotFound(id.to_string()))
    }

    pub fn create_session(&self, scenario_ref: &str) -> Result<SessionView, DemoError> {
        let scenario = self.scenario(scenario_ref)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let now = now_ms();
        let session = Session {
            id: id.clone(),
            observation: world::initial_observation(&scenario, scenario.source_cell),
            state: UavState::start(scenario.source_cell),
            scenario,
            steps: Vec::new(),
            views: Vec::new(),
            trajectory_id: None,
            created_at_ms: now,
            last_active_ms: now,
        };
        let view = session.view();
        self.sessions.write().expect("session map lock poisoned").insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub fn get_session(&self, id: &str) -> Result<SessionView, DemoError> {
        let s = self.session(id)?;
        let s = s.lock().expect("session lock poisoned");
        Ok(s.view())
    }

    /// Applies one joint action; the response is the new step's view.
    pub fn step_session(&self, id: &str, move_dir: Direction, power_idx: u8) -> Result<StepView, DemoError> {
        let action = Action::new(move_dir, power_idx).map_err(|e| DemoError::Validation(e.to_string()))?;
        let s = self.session(id)?;
        let mut s = s.lock().expect("session lock poisoned");
        if s.trajectory_id.is_some() {
            return Err(DemoError::Conflict(format!("session {id} is finalized")));
        }
        if s.state.done {
            return Err(DemoError::Conflict(format!("session {id} has finished its episode")));
        }
        let from = s.state.cell;
        let out = world::step(&s.scenario, &s.state, action)?;
        let rec = StepRecord {
            t: s.state.hops_used,
            cell: out.state.cell,
            action,
            features: out.features,
            throughput_bps: out.metrics.throughput_bps,
            interference_w: out.metrics.interference_w,
            done: out.state.done,
        };
        let view = step_view(&s.scenario, from, &rec)?;
        s.state = out.state;
        s.observation = out.features;
        s.steps.push(rec);
        s.views.push(view.clone());
        s.last_active_ms = now_ms();
        Ok(view)
    }

    /// Persists a finished episode as a human-expert trajectory.
    pub fn finalize_session(&self, id: &str) -> Result<String, DemoError> {
        let s = self.session(id)?;
        let mut s = s.lock().expect("session lock poisoned");
        if let Some(t) = &s.trajectory_id {
            return Err(DemoError::Conflict(format!("session {id} was already finalized as {t}")));
        }
        if !s.state.done {
            return Err(DemoError::Conflict(format!("session {id} has not finished its episode")));
        }
        let traj = s.trajectory();
        traj.validate_against(&s.scenario)?;
        let tid = self.store.save(&traj)?;
        s.trajectory_id = Some(tid.clone());
        s.last_active_ms = now_ms();
        Ok(tid)
    }

    /// Server-side greedy rollout of a registered policy on its own
    /// scenario. Run `k = 0` of an evaluation with the same seed.
    pub fn rollout(&self, policy_id: &str, start: Option<CellCoord>, master_seed: u64) -> Result<RolloutView, DemoError> {
        let art = self.policies.get(policy_id).ok_or_else(|| DemoError::PolicyNotFound(policy_id.to_string()))?;
        let scenario = self.scenario(&art.scenario_id)?;
        self.rollout_on(art, &scenario, start, master_seed)
    }

    fn rollout_on(&self, art: &PolicyArtifact, scenario: &Scenario, start: Option<CellCoord>, master_seed: u64) -> Result<RolloutView, DemoError> {
        let sid = scenario.id();
        if art.scenario_id != sid {
            return Err(DemoError::ScenarioMismatch { policy: art.id.clone(), expected: sid, found: art.scenario_id.clone() });
        }
        let start = start.unwrap_or(scenario.source_cell);
        if !scenario.grid().contains(start) {
            return Err(DemoError::Validation(format!("start cell {start} is off the grid")));
        }
        let traj = policy::rollout(scenario, &art.policy, start, &mut harness::eval_rng(master_seed, 0))?;
        let mut from = start;
        let mut frames = Vec::with_capacity(traj.len());
        for rec in &traj.steps {
            frames.push(step_view(scenario, from, rec)?);
            from = rec.cell;
        }
        Ok(RolloutView { schema_version: DEMO_SCHEMA_VERSION, policy_id: art.id.clone(), scenario_id: sid, start_cell: start, frames })
    }

    /// Like [`SessionManager::rollout`] but on an explicitly named scenario,
    /// which must be the one the policy was trained on.
    pub fn rollout_on_scenario(&self, policy_id: &str, scenario_ref: &str, start: Option<CellCoord>, master_seed: u64) -> Result<RolloutView, DemoError> {
        let art = self.policies.get(policy_id).ok_or_else(|| DemoError::PolicyNotFound(policy_id.to_string()))?;
        let scenario = self.scenario(scenario_ref)?;
        self.rollout_on(art, &scenario, start, master_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bc;
    use crate::harness::{LearnerKind, RunConfig};
    use crate::policy::PolicyModel;
    use crate::world::{build_scenario, ScenarioConfig};

    fn manager() -> (SessionManager, tempfile::TempDir, String) {
        let dir = tempfile::tempdir().unwrap();
        let mut m = SessionManager::new(TrajectoryStore::open(dir.path()).unwrap());
        let id = m.add_scenario(Some("default"), build_scenario(&ScenarioConfig::default(), 42).unwrap());
        (m, dir, id)
    }

    fn expert_moves(m: &SessionManager) -> Vec<Action> {
        let sc = m.scenario("default").unwrap();
        bc::expert_actions(&sc, &bc::ExpertOracleConfig::default()).unwrap()
    }

    #[test]
    fn fresh_session_starts_at_source() {
        let (m, _d, id) = manager();
        let v = m.create_session("default").unwrap();
        let sc = m.scenario(&id).unwrap();
        assert_eq!(v.state, UavState::start(sc.source_cell));
        assert_eq!(v.status, SessionStatus::Active);
        assert_eq!(v.scenario_id, id);
        let w = m.create_session(&id).unwrap();
        assert_ne!(v.id, w.id);
        assert!(matches!(m.create_session("nope"), Err(DemoError::ScenarioNotFound(_))));
    }

    #[test]
    fn step_matches_direct_world_call() {
        let (m, _d, _) = manager();
        let sc = m.scenario("default").unwrap();
        let v = m.create_session("default").unwrap();
        let step = m.step_session(&v.id, Direction::NE, 3).unwrap();
        let direct = world::step(&sc, &UavState::start(sc.source_cell), Action::new(Direction::NE, 3).unwrap()).unwrap();
        assert_eq!(step.cell, direct.state.cell);
        assert_eq!(step.features, direct.features);
        assert_eq!(step.throughput_bps, direct.metrics.throughput_bps);
        assert_eq!(step.interference_w, direct.metrics.interference_w);
        let sum: f64 = step.neighbors.iter().map(|n| n.interference_w).sum();
        assert!((sum - step.interference_w).abs() <= 1e-12 * step.interference_w);
    }

    #[test]
    fn off_grid_move_is_visible_clamp() {
        let (m, _d, _) = manager();
        let v = m.create_session("default").unwrap();
        let step = m.step_session(&v.id, Direction::S, 0).unwrap();
        assert!(step.blocked);
        assert_eq!(step.cell, v.state.cell);
        assert_eq!(step.hops_used, 1);
        assert!(matches!(m.step_session(&v.id, Direction::S, 6), Err(DemoError::Validation(_))));
    }

    #[test]
    fn finalize_lifecycle() {
        let (m, _d, _) = manager();
        let v = m.create_session("default").unwrap();
        assert!(matches!(m.finalize_session(&v.id), Err(DemoError::Conflict(_))));
        for a in expert_moves(&m) {
            m.step_session(&v.id, a.move_dir, a.power_idx).unwrap();
        }
        assert_eq!(m.get_session(&v.id).unwrap().status, SessionStatus::Done);
        assert!(matches!(m.step_session(&v.id, Direction::N, 0), Err(DemoError::Conflict(_))));
        let tid = m.finalize_session(&v.id).unwrap();
        assert!(matches!(m.finalize_session(&v.id), Err(DemoError::Conflict(_))));
        let got = m.get_session(&v.id).unwrap();
        assert_eq!(got.status, SessionStatus::Finalized);
        assert_eq!(got.trajectory_id.as_deref(), Some(tid.as_str()));

        // identical to the library-direct replay, apart from the source tag
        let sc = m.scenario("default").unwrap();
        let saved = m.store().load(&tid).unwrap();
        let mut direct = policy::rollout(&sc, &PolicyModel::Scripted(expert_moves(&m)), sc.source_cell, &mut harness::eval_rng(0, 0)).unwrap();
        direct.source = TrajectorySource::HumanExpert;
        assert_eq!(saved, direct);
        assert_eq!(saved.to_jsonl(), direct.to_jsonl());

        // feeds BC without transformation
        let tree = bc::fit_tree(&bc::bc_dataset(&sc, &[saved])).unwrap();
        assert!(tree.leaf_count() >= 1);
    }

    #[test]
    fn interleaved_sessions_stay_isolated() {
        let (m, _d, _) = manager();
        let a = m.create_session("default").unwrap().id;
        let b = m.create_session("default").unwrap().id;
        let solo = m.create_session("default").unwrap().id;
        let moves = [(Direction::N, 1), (Direction::NE, 5), (Direction::SE, 0), (Direction::N, 2)];
        for &(d, p) in &moves {
            m.step_session(&a, d, p).unwrap();
            m.step_session(&b, Direction::S, 4).unwrap();
        }
        for &(d, p) in &moves {
            m.step_session(&solo, d, p).unwrap();
        }
        let (va, vs) = (m.get_session(&a).unwrap(), m.get_session(&solo).unwrap());
        assert_eq!(va.state, vs.state);
        assert_eq!(
            va.steps.iter().map(|s| (s.cell, s.features)).collect::<Vec<_>>(),
            vs.steps.iter().map(|s| (s.cell, s.features)).collect::<Vec<_>>()
        );
        assert!(m.get_session(&b).unwrap().steps.iter().all(|s| s.blocked));
    }

    #[test]
    fn rollout_frames_match_single_run_evaluation() {
        let (mut m, _d, id) = manager();
        let sc = m.scenario(&id).unwrap();
        let art = PolicyArtifact::new(&sc, &RunConfig::desk(LearnerKind::Shortest), None, PolicyModel::ShortestPath);
        let pid = art.id.clone();
        m.add_policy(art.clone()).unwrap();
        let frames = m.rollout(&pid, None, 5).unwrap().frames;
        let ev = harness::evaluate(&art, &sc, 1, None, 5, None).unwrap();
        assert_eq!(frames.len(), ev.rows.len());
        for (f, r) in frames.iter().zip(&ev.rows) {
            assert_eq!(f.throughput_bps, r.throughput_mean);
            assert_eq!(f.interference_w, r.interference_mean);
            assert_eq!(f.distance_to_dest as f64, r.distance);
        }
        assert_eq!(m.rollout(&pid, None, 5).unwrap(), m.rollout(&pid, None, 5).unwrap());
        assert!(matches!(m.rollout("missing", None, 0), Err(DemoError::PolicyNotFound(_))));
        assert_eq!(m.policies().len(), 1);
    }

    #[test]
    fn rollout_on_wrong_scenario_rejected() {
        let (mut m, _d, id) = manager();
        let other = build_scenario(&ScenarioConfig::default(), 7).unwrap();
        m.add_scenario(Some("other"), other);
        let sc = m.scenario(&id).unwrap();
        let art = PolicyArtifact::new(&sc, &RunConfig::desk(LearnerKind::Random), None, PolicyModel::Random);
        let pid = art.id.clone();
        m.add_policy(art).unwrap();
        assert!(matches!(m.rollout_on_scenario(&pid, "other", None, 0), Err(DemoError::ScenarioMismatch { .. })));
    }

    #[test]
    fn scenario_view_lists_every_cell() {
        let (m, _d, _) = manager();
        let sc = m.scenario("default").unwrap();
        let v = ScenarioView::new(&sc);
        assert_eq!(v.cells.len(), 25);
        assert_eq!(v.cells.iter().map(|c| c.ue_count).sum::<u32>(), 75);
        for c in &v.cells {
            for (d, n) in &c.neighbors {
                assert_eq!(sc.grid().neighbor(c.cell, *d), *n);
            }
        }
    }
}
