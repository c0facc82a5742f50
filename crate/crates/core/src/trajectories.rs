//! Recorded episodes, their on-disk format and discounted feature
//! expectations.
//!
//! A trajectory file is UTF-8 JSON lines, LF-terminated: one header line
//! followed by one line per step.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{self, Action, CellCoord, FeatureVector, Scenario, NUM_FEATURES};

pub const TRAJECTORY_SCHEMA_VERSION: u32 = 1;
const FILE_EXT: &str = "jsonl";

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("trajectory has no steps")]
    Empty,
    #[error("discount factor must be in (0, 1], got {0}")]
    InvalidGamma(f64),
    #[error("trajectories come from different scenarios ({0} vs {1})")]
    MixedScenario(String, String),
    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("corrupt trajectory record at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("invalid trajectory: {0}")]
    Invalid(String),
    #[error("no trajectory with id `{0}`")]
    NotFound(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum TrajectorySource {
    HumanExpert,
    ScriptedExpert,
    Policy(String),
}

impl From<TrajectorySource> for String {
    fn from(s: TrajectorySource) -> String {
        match s {
            TrajectorySource::HumanExpert => "human_expert".into(),
            TrajectorySource::ScriptedExpert => "scripted_expert".into(),
            TrajectorySource::Policy(name) => format!("policy:{name}"),
        }
    }
}

impl TryFrom<String> for TrajectorySource {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        match s.as_str() {
            "human_expert" => Ok(TrajectorySource::HumanExpert),
            "scripted_expert" => Ok(TrajectorySource::ScriptedExpert),
            other => other
                .strip_prefix("policy:")
                .map(|name| TrajectorySource::Policy(name.to_string()))
                .ok_or_else(|| format!("unknown trajectory source `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: u32,
    pub cell: CellCoord,
    pub action: Action,
    /// Features of the post-step state.
    pub features: FeatureVector,
    pub throughput_bps: f64,
    pub interference_w: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scenario_id: String,
    pub source: TrajectorySource,
    pub start_cell: CellCoord,
    pub steps: Vec<StepRecord>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    scenario_id: String,
    source: TrajectorySource,
    start_q: i32,
    start_r: i32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepLine {
    t: u32,
    cell_q: i32,
    cell_r: i32,
    action: usize,
    phi: [f64; NUM_FEATURES],
    throughput_bps: f64,
    interference_w: f64,
    done: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_cell(&self) -> CellCoord {
        self.steps.last().map_or(self.start_cell, |s| s.cell)
    }

    /// Structural invariants: non-empty, consecutive `t` from 0, and only the
    /// last record is terminal.
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.steps.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        for (i, s) in self.steps.iter().enumerate() {
            if s.t as usize != i {
                return Err(TrajectoryError::Invalid(format!("record {i} has t = {}", s.t)));
            }
            let last = i + 1 == self.steps.len();
            if s.done != last {
                return Err(TrajectoryError::Invalid(format!(
                    "record {i} has done = {} but {} the last record",
                    s.done,
                    if last { "is" } else { "is not" }
                )));
            }
        }
        Ok(())
    }

    /// Checks the cell chain against the scenario's movement rules.
    pub fn validate_against(&self, scenario: &Scenario) -> Result<(), TrajectoryError> {
        self.validate()?;
        if self.scenario_id != scenario.id() {
            return Err(TrajectoryError::MixedScenario(self.scenario_id.clone(), scenario.id()));
        }
        let grid = scenario.grid();
        let mut prev = self.start_cell;
        for s in &self.steps {
            let expected = grid.neighbor(prev, s.action.move_dir);
            if s.cell != expected {
                return Err(TrajectoryError::Invalid(format!(
                    "step {} moves {:?} from {prev} to {}, expected {expected}",
                    s.t, s.action.move_dir, s.cell
                )));
            }
            prev = s.cell;
        }
        Ok(())
    }

    /// Replays the actions and returns the steps whose stored features
    /// differ from a fresh recomputation by more than `tol`.
    pub fn feature_drift(&self, scenario: &Scenario, tol: f64) -> Result<Vec<u32>, world::WorldError> {
        let mut state = world::UavState::start(self.start_cell);
        let mut drifted = Vec::new();
        for s in &self.steps {
            let out = world::step(scenario, &state, s.action)?;
            let off = out
                .features
                .0
                .iter()
                .zip(&s.features.0)
                .any(|(a, b)| (a - b).abs() > tol);
            if off {
                drifted.push(s.t);
            }
            state = out.state;
        }
        Ok(drifted)
    }

    pub fn to_jsonl(&self) -> String {
        let header = Header {
            schema_version: TRAJECTORY_SCHEMA_VERSION,
            scenario_id: self.scenario_id.clone(),
            source: self.source.clone(),
            start_q: self.start_cell.q,
            start_r: self.start_cell.r,
        };
        let mut out = serde_json::to_string(&header).expect("header serialises");
        out.push('\n');
        for s in &self.steps {
            let line = StepLine {
                t: s.t,
                cell_q: s.cell.q,
                cell_r: s.cell.r,
                action: s.action.index(),
                phi: s.features.0,
                throughput_bps: s.throughput_bps,
                interference_w: s.interference_w,
                done: s.done,
            };
            out.push_str(&serde_json::to_string(&line).expect("step serialises"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trajectory, TrajectoryError> {
        if !text.ends_with('\n') {
            let line = text.lines().count();
            return Err(TrajectoryError::Corrupt { line, reason: "missing final line terminator".into() });
        }
        let mut lines = text.split_terminator('\n').enumerate();
        let (_, first) = lines
            .next()
            .ok_or(TrajectoryError::Corrupt { line: 1, reason: "missing header".into() })?;
        let header: Header = serde_json::from_str(first)
            .map_err(|e| TrajectoryError::Corrupt { line: 1, reason: e.to_string() })?;
        if header.schema_version != TRAJECTORY_SCHEMA_VERSION {
            return Err(TrajectoryError::SchemaVersion {
                found: header.schema_version,
                expected: TRAJECTORY_SCHEMA_VERSION,
            });
        }
        let mut steps = Vec::new();
        for (i, raw) in lines {
            let corrupt = |reason: String| TrajectoryError::Corrupt { line: i + 1, reason };
            let l: StepLine = serde_json::from_str(raw).map_err(|e| corrupt(e.to_string()))?;
            let action = Action::from_index(l.action).map_err(|e| corrupt(e.to_string()))?;
            steps.push(StepRecord {
                t: l.t,
                cell: CellCoord::new(l.cell_q, l.cell_r),
                action,
                features: FeatureVector(l.phi),
                throughput_bps: l.throughput_bps,
                interference_w: l.interference_w,
                done: l.done,
            });
        }
        let traj = Trajectory {
            scenario_id: header.scenario_id,
            source: header.source,
            start_cell: CellCoord::new(header.start_q, header.start_r),
            steps,
        };
        traj.validate().map_err(|e| TrajectoryError::Corrupt {
            line: traj.steps.len() + 1,
            reason: e.to_string(),
        })?;
        Ok(traj)
    }
}

/// `sum_t gamma^t * phi(s_t)` over the recorded post-step features.
pub fn discounted_feature_sum(traj: &Trajectory, gamma: f64) -> Result<[f64; NUM_FEATURES], TrajectoryError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(TrajectoryError::InvalidGamma(gamma));
    }
    if traj.steps.is_empty() {
        return Err(TrajectoryError::Empty);
    }
    let mut acc = [0.0; NUM_FEATURES];
    let mut discount = 1.0;
    for s in &traj.steps {
        for (a, phi) in acc.iter_mut().zip(&s.features.0) {
            *a += discount * phi;
        }
        discount *= gamma;
    }
    Ok(acc)
}

/// Mean discounted feature sum over trajectories of one scenario.
pub fn feature_expectation(trajs: &[Trajectory], gamma: f64) -> Result<[f64; NUM_FEATURES], TrajectoryError> {
    let first = trajs.first().ok_or(TrajectoryError::Empty)?;
    if let Some(other) = trajs.iter().find(|t| t.scenario_id != first.scenario_id) {
        return Err(TrajectoryError::MixedScenario(first.scenario_id.clone(), other.scenario_id.clone()));
    }
    let mut mu = [0.0; NUM_FEATURES];
    for t in trajs {
        let s = discounted_feature_sum(t, gamma)?;
        for (m, v) in mu.iter_mut().zip(s) {
            *m += v;
        }
    }
    let n = trajs.len() as f64;
    Ok(mu.map(|m| m / n))
}

/// Directory of trajectory files. Ids sort in insertion order.
#[derive(Debug, Clone)]
pub struct TrajectoryStore {
    dir: PathBuf,
}

impl TrajectoryStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, TrajectoryError> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(TrajectoryStore { dir: dir.as_ref().to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.{FILE_EXT}"))
    }

    pub fn list(&self) -> Result<Vec<String>, TrajectoryError> {
        let mut ids: Vec<String> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                let id = name.strip_suffix(&format!(".{FILE_EXT}"))?;
                (!id.starts_with('.')).then(|| id.to_string())
            })
            .collect();
        ids.sort();
        Ok(ids)
    }

    fn next_seq(&self) -> Result<u64, TrajectoryError> {
        Ok(self
            .list()?
            .iter()
            .filter_map(|id| id.split('-').next()?.parse::<u64>().ok())
            .max()
            .map_or(1, |m| m + 1))
    }

    /// Writes the whole file under a temporary name, then links it into
    /// place; an existing id is never overwritten.
    pub fn save(&self, traj: &Trajectory) -> Result<String, TrajectoryError> {
        traj.validate()?;
        let body = traj.to_jsonl();
        let hash = crate::seed::content_hash(body.as_bytes());
        let tmp = self.dir.join(format!(".{}-{}.tmp", hash, std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(body.as_bytes())?;
            f.sync_all()?;
        }
        let result = loop {
            let id = format!("{:06}-{}", self.next_seq()?, &hash[..8]);
            match fs::hard_link(&tmp, self.path_of(&id)) {
                Ok(()) => break Ok(id),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => break Err(e.into()),
            }
        };
        let _ = fs::remove_file(&tmp);
        result
    }

    pub fn load(&self, id: &str) -> Result<Trajectory, TrajectoryError> {
        let path = self.path_of(id);
        if !path.exists() {
            return Err(TrajectoryError::NotFound(id.to_string()));
        }
        Trajectory::from_jsonl(&fs::read_to_string(path)?)
    }

    pub fn load_all(&self) -> Result<Vec<Trajectory>, TrajectoryError> {
        self.list()?.iter().map(|id| self.load(id)).collect()
    }
}
