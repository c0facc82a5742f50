//! Experiment orchestration: training runs with on-disk artifacts, averaged
//! greedy evaluation, unseen-start comparisons and CSV export.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bc::{self, BcError, ExpertOracleConfig};
use crate::channel::ChannelMode;
use crate::dqn::DqnConfig;
use crate::irl::{self, IrlConfig, IrlError, IrlIterationLog, LearnerSpec, QpError, RewardWeights, Termination};
use crate::learn::{TrainError, TrainingStats};
use crate::lfa::LfaConfig;
use crate::policy::{self, PolicyModel};
use crate::seed::{self, content_hash};
use crate::trajectories::{Trajectory, TrajectoryError};
use crate::world::{hex_distance, CellCoord, Scenario, WorldError};

pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;
pub const METRICS_HEADER: &str = "index,throughput_mean,throughput_std,interference_mean,interference_std,distance,reward";

/// Episode budget of the quick profile.
pub const DESK_NUM_EPS: u32 = 2_000;
/// Episode budget of the full profile.
pub const FULL_NUM_EPS: u32 = 10_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("artifact was trained on scenario {found}, but the scenario given is {expected}")]
    ScenarioMismatch { expected: String, found: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error(transparent)]
    Irl(#[from] IrlError),
    #[error(transparent)]
    Bc(#[from] BcError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    World(#[from] WorldError),
}

impl HarnessError {
    /// True for failures of the numerics (divergence, solver breakdown) as
    /// opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            HarnessError::Train(TrainError::NonFinite { .. }) => true,
            HarnessError::Irl(IrlError::Train(TrainError::NonFinite { .. })) => true,
            HarnessError::Irl(IrlError::Qp(QpError::NoConvergence(_) | QpError::NonFinite(_) | QpError::Singular)) => true,
            _ => false,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LearnerKind {
    #[serde(rename = "irl-lfa")]
    IrlLfa,
    #[serde(rename = "irl-dqn")]
    IrlDqn,
    #[serde(rename = "bc")]
    Bc,
    #[serde(rename = "shortest")]
    Shortest,
    #[serde(rename = "random")]
    Random,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 5] =
        [LearnerKind::IrlLfa, LearnerKind::IrlDqn, LearnerKind::Bc, LearnerKind::Shortest, LearnerKind::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::IrlLfa => "irl-lfa",
            LearnerKind::IrlDqn => "irl-dqn",
            LearnerKind::Bc => "bc",
            LearnerKind::Shortest => "shortest",
            LearnerKind::Random => "random",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown learner `{s}` (expected irl-lfa, irl-dqn, bc, shortest or random)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub learner: LearnerKind,
    pub channel: ChannelMode,
    pub master_seed: u64,
    pub num_eps: u32,
    pub eps_irl: f64,
    pub max_iters: usize,
    /// Rollouts per learner feature-expectation estimate inside IRL.
    pub irl_rollouts: usize,
    pub eval_runs: usize,
    pub start_cell: Option<CellCoord>,
    /// Scripted demonstrations generated when none are supplied.
    pub n_experts: usize,
    pub bc_train_frac: f64,
    /// Overrides the learner's default step size.
    pub learning_rate: Option<f64>,
}

impl RunConfig {
    /// Quick profile: 2000 training episodes.
    pub fn desk(learner: LearnerKind) -> RunConfig {
        RunConfig {
            learner,
            channel: ChannelMode::Probabilistic,
            master_seed: 42,
            num_eps: DESK_NUM_EPS,
            eps_irl: 0.1,
            max_iters: 25,
            irl_rollouts: 25,
            eval_runs: 25,
            start_cell: None,
            n_experts: 10,
            bc_train_frac: 0.8,
            learning_rate: None,
        }
    }

    /// Full profile: 10^4 training episodes.
    pub fn full(learner: LearnerKind) -> RunConfig {
        RunConfig { num_eps: FULL_NUM_EPS, ..RunConfig::desk(learner) }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.eval_runs == 0 {
            return bad("eval_runs must be at least 1".into());
        }
        if self.num_eps == 0 {
            return bad("num_eps must be at least 1".into());
        }
        if !(self.eps_irl > 0.0) {
            return bad(format!("eps_irl must be positive, got {}", self.eps_irl));
        }
        if self.max_iters == 0 || self.irl_rollouts == 0 {
            return bad("max_iters and irl_rollouts must be at least 1".into());
        }
        if self.n_experts == 0 {
            return bad("n_experts must be at least 1".into());
        }
        if !(self.bc_train_frac > 0.0 && self.bc_train_frac < 1.0) {
            return bad(format!("bc_train_frac must be in (0, 1), got {}", self.bc_train_frac));
        }
        Ok(())
    }

    pub fn learner_spec(&self) -> Option<LearnerSpec> {
        match self.learner {
            LearnerKind::IrlLfa => {
                let d = LfaConfig::default();
                let alpha_sgd = self.learning_rate.unwrap_or(d.alpha_sgd);
                Some(LearnerSpec::Lfa(LfaConfig { num_eps: self.num_eps, alpha_sgd, ..d }))
            }
            LearnerKind::IrlDqn => {
                let d = DqnConfig::default();
                let learning_rate = self.learning_rate.unwrap_or(d.learning_rate);
                Some(LearnerSpec::Dqn(DqnConfig { num_eps: self.num_eps, learning_rate, ..d }))
            }
            _ => None,
        }
    }

    pub fn irl_config(&self) -> IrlConfig {
        IrlConfig { eps_irl: self.eps_irl, max_iters: self.max_iters, rollouts: self.irl_rollouts }
    }
}

/// A trained (or scripted) policy as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyArtifact {
    pub schema_version: u32,
    pub id: String,
    pub scenario_id: String,
    pub learner: LearnerKind,
    pub weights: Option<RewardWeights>,
    pub weights_hash: Option<String>,
    pub config: RunConfig,
    pub policy: PolicyModel,
}

impl PolicyArtifact {
    pub fn new(scenario: &Scenario, config: &RunConfig, weights: Option<RewardWeights>, policy: PolicyModel) -> Self {
        let body = serde_json::to_vec(&(&policy, &weights, scenario.id())).expect("policy serialises");
        PolicyArtifact {
            schema_version: ARTIFACT_SCHEMA_VERSION,
            id: format!("{}-{}", config.learner, content_hash(&body)),
            scenario_id: scenario.id(),
            learner: config.learner,
            weights_hash: weights.as_ref().map(RewardWeights::hash),
            weights,
            config: config.clone(),
            policy,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<PolicyArtifact, String> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let version = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != ARTIFACT_SCHEMA_VERSION {
            return Err(format!("schema version {version} is not supported (expected {ARTIFACT_SCHEMA_VERSION})"));
        }
        let art: PolicyArtifact = serde_json::from_value(value).map_err(|e| e.to_string())?;
        if let PolicyModel::Tree(t) = &art.policy {
            t.validate().map_err(|e| e.to_string())?;
        }
        Ok(art)
    }

    pub fn load(path: &Path) -> Result<PolicyArtifact, HarnessError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        PolicyArtifact::from_json(&text).map_err(|reason| HarnessError::Parse { path: path.to_path_buf(), reason })
    }

    pub fn check_scenario(&self, scenario: &Scenario) -> Result<(), HarnessError> {
        let expected = scenario.id();
        if self.scenario_id != expected {
            return Err(HarnessError::ScenarioMismatch { expected, found: self.scenario_id.clone() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlSummary {
    pub termination: Termination,
    pub iterations: usize,
    pub best_iter: usize,
    pub best_hyper_distance: f64,
    pub log: Vec<IrlIterationLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcReport {
    pub accuracy: f64,
    pub split_seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub depth: usize,
    pub leaves: usize,
}

#[derive(Debug, Clone)]
pub struct TrainingOutput {
    pub artifact: PolicyArtifact,
    pub files: Vec<PathBuf>,
    pub irl: Option<IrlSummary>,
    pub bc: Option<BcReport>,
    pub training_stats: Option<TrainingStats>,
}

/// The scenario a run operates on: the given one with the run's channel mode.
pub fn run_scenario(base: &Scenario, config: &RunConfig) -> Result<Scenario, HarnessError> {
    Ok(base.with_channel_mode(config.channel)?)
}

pub fn scripted_experts(scenario: &Scenario, n: usize) -> Result<Vec<Trajectory>, HarnessError> {
    Ok(bc::scripted_expert(scenario, &ExpertOracleConfig::default(), n)?)
}

fn write(path: PathBuf, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    fs::write(&path, contents).map_err(io_err(&path))?;
    files.push(path);
    Ok(())
}

fn irl_log_csv(log: &[IrlIterationLog]) -> String {
    let mut s = String::from("iter,hyper_distance,l2_gap,w1,w2,w3,w4,w5,mu1,mu2,mu3,mu4,mu5\n");
    for e in log {
        s.push_str(&format!("{},{},{}", e.iter, e.hyper_distance, e.l2_gap));
        for v in e.w.0.iter().chain(&e.mu) {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
    }
    s
}

fn returns_csv(stats: &TrainingStats) -> String {
    let mut s = String::from("episode,return,reached\n");
    for (i, (r, ok)) in stats.episode_returns.iter().zip(&stats.episode_reached).enumerate() {
        s.push_str(&format!("{i},{r},{}\n", u8::from(*ok)));
    }
    s
}

/// Trains the configured learner on `scenario` (already in the run's
/// channel mode) and writes its artifacts to `out_dir`. Without `experts`,
/// scripted demonstrations are generated. `iteration_hook` sees every IRL
/// iteration as it completes.
pub fn run_training(
    scenario: &Scenario,
    experts: Option<&[Trajectory]>,
    config: &RunConfig,
    out_dir: &Path,
    iteration_hook: impl FnMut(&IrlIterationLog),
) -> Result<TrainingOutput, HarnessError> {
    config.validate()?;
    if scenario.channel.channel_mode != config.channel {
        return Err(HarnessError::InvalidConfig(format!(
            "scenario uses the {:?} channel but the run asks for {:?}",
            scenario.channel.channel_mode, config.channel
        )));
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let needs_experts = matches!(config.learner, LearnerKind::IrlLfa | LearnerKind::IrlDqn | LearnerKind::Bc);
    let generated;
    let experts = match experts {
        Some(e) if !e.is_empty() => e,
        _ if needs_experts => {
            generated = scripted_experts(scenario, config.n_experts)?;
            &generated[..]
        }
        _ => &[],
    };
    for t in experts {
        t.validate_against(scenario)?;
    }

    let mut files = Vec::new();
    let mut irl_summary = None;
    let mut bc_report = None;
    let mut training_stats = None;

    let artifact = match config.learner {
        LearnerKind::IrlLfa | LearnerKind::IrlDqn => {
            let spec = config.learner_spec().expect("IRL learner");
            let out = irl::run_irl(scenario, experts, &spec, &config.irl_config(), config.master_seed, iteration_hook)?;
            let summary = IrlSummary {
                termination: out.termination,
                iterations: out.log.len(),
                best_iter: out.best_iter,
                best_hyper_distance: out.log[out.best_iter].hyper_distance,
                log: out.log.clone(),
            };
            write(out_dir.join("weights.json"), &format!("{}\n", serde_json::to_string_pretty(&out.weights).expect("weights")), &mut files)?;
            write(out_dir.join("irl_log.csv"), &irl_log_csv(&out.log), &mut files)?;
            write(out_dir.join("training_returns.csv"), &returns_csv(&out.training_stats), &mut files)?;
            irl_summary = Some(summary);
            training_stats = Some(out.training_stats);
            PolicyArtifact::new(scenario, config, Some(out.weights), out.policy)
        }
        LearnerKind::Bc => {
            let data = bc::bc_dataset(scenario, experts);
            let (train, test) = bc::split_dataset(&data, config.bc_train_frac, config.master_seed);
            let tree = bc::fit_tree(&train)?;
            let accuracy = bc::evaluate_bc(&tree, &test)?;
            let report = BcReport {
                accuracy,
                split_seed: config.master_seed,
                train_size: train.len(),
                test_size: test.len(),
                depth: tree.depth(),
                leaves: tree.leaf_count(),
            };
            write(out_dir.join("tree.json"), &format!("{}\n", serde_json::to_string_pretty(&tree).expect("tree")), &mut files)?;
            write(out_dir.join("bc_report.json"), &format!("{}\n", serde_json::to_string_pretty(&report).expect("report")), &mut files)?;
            bc_report = Some(report);
            PolicyArtifact::new(scenario, config, None, PolicyModel::Tree(tree))
        }
        LearnerKind::Shortest => PolicyArtifact::new(scenario, config, None, PolicyModel::ShortestPath),
        LearnerKind::Random => PolicyArtifact::new(scenario, config, None, PolicyModel::Random),
    };
    write(out_dir.join("policy.json"), &artifact.to_json(), &mut files)?;
    Ok(TrainingOutput { artifact, files, irl: irl_summary, bc: bc_report, training_stats })
}

/// One row of an averaged per-step series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    /// 1-based step index.
    pub index: u32,
    pub throughput_mean: f64,
    pub throughput_std: f64,
    pub interference_mean: f64,
    pub interference_std: f64,
    /// Mean hex distance to the destination after this step.
    pub distance: f64,
    /// Mean reward accumulated up to and including this step.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub path: Vec<CellCoord>,
    pub steps: usize,
    pub reached: bool,
    pub final_distance: u32,
    pub total_interference_w: f64,
    pub mean_throughput_bps: f64,
    pub total_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub runs: usize,
    pub reached: usize,
    pub mean_final_distance: f64,
    pub mean_steps: f64,
    pub mean_total_interference_w: f64,
    pub mean_throughput_bps: f64,
    pub mean_total_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub policy_id: String,
    pub start_cell: CellCoord,
    pub rows: Vec<MetricsRow>,
    pub runs: Vec<RunSummary>,
    pub summary: EvalSummary,
}

/// Mean and population standard deviation. Identical inputs give exactly
/// that value and zero spread.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let pivot = xs[0];
    let mean = pivot + xs.iter().map(|x| x - pivot).sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    mean_std(&v).0
}

/// The seeded rollout stream used for run `k` of an evaluation.
pub fn eval_rng(master_seed: u64, k: usize) -> seed::Rng {
    seed::rng_for(master_seed, "eval", k as u64)
}

/// Greedy rollouts of `artifact` from `start` (the scenario's source by
/// default). Per-step statistics are truncated at the shortest run; each
/// run is also summarised on its own. `weights` (falling back to the
/// artifact's) price the reward column; without any, rewards are zero.
pub fn evaluate(
    artifact: &PolicyArtifact,
    scenario: &Scenario,
    eval_runs: usize,
    start: Option<CellCoord>,
    master_seed: u64,
    weights: Option<&RewardWeights>,
) -> Result<Evaluation, HarnessError> {
    artifact.check_scenario(scenario)?;
    if eval_runs == 0 {
        return Err(HarnessError::InvalidConfig("eval_runs must be at least 1".into()));
    }
    let start = start.unwrap_or(scenario.source_cell);
    if !scenario.grid().contains(start) {
        return Err(HarnessError::InvalidConfig(format!("start cell {start} is off the grid")));
    }
    let weights = weights.or(artifact.weights.as_ref()).copied().unwrap_or(RewardWeights([0.0; 5]));

    let trajs: Vec<Trajectory> = (0..eval_runs)
        .map(|k| policy::rollout(scenario, &artifact.policy, start, &mut eval_rng(master_seed, k)))
        .collect::<Result<_, _>>()?;
    Ok(summarise(&artifact.id, scenario, start, &trajs, &weights))
}

fn summarise(policy_id: &str, scenario: &Scenario, start: CellCoord, trajs: &[Trajectory], weights: &RewardWeights) -> Evaluation {
    let dest = scenario.dest_cell;
    let runs: Vec<RunSummary> = trajs
        .iter()
        .map(|t| {
            let mut path = vec![t.start_cell];
            path.extend(t.steps.iter().map(|s| s.cell));
            RunSummary {
                path,
                steps: t.len(),
                reached: t.final_cell() == dest,
                final_distance: hex_distance(t.final_cell(), dest),
                total_interference_w: t.steps.iter().map(|s| s.interference_w).sum(),
                mean_throughput_bps: mean(t.steps.iter().map(|s| s.throughput_bps)),
                total_reward: t.steps.iter().map(|s| weights.reward(&s.features)).sum(),
            }
        })
        .collect();

    let shortest = trajs.iter().map(Trajectory::len).min().unwrap_or(0);
    let mut acc_reward = vec![0.0; trajs.len()];
    let mut rows = Vec::with_capacity(shortest);
    for i in 0..shortest {
        let col = |f: &dyn Fn(&Trajectory) -> f64| trajs.iter().map(f).collect::<Vec<f64>>();
        let (tm, ts) = mean_std(&col(&|t| t.steps[i].throughput_bps));
        let (im, is) = mean_std(&col(&|t| t.steps[i].interference_w));
        let dist = mean(trajs.iter().map(|t| hex_distance(t.steps[i].cell, dest) as f64));
        for (a, t) in acc_reward.iter_mut().zip(trajs) {
            *a += weights.reward(&t.steps[i].features);
        }
        rows.push(MetricsRow {
            index: i as u32 + 1,
            throughput_mean: tm,
            throughput_std: ts,
            interference_mean: im,
            interference_std: is,
            distance: dist,
            reward: mean_std(&acc_reward).0,
        });
    }

    let summary = EvalSummary {
        runs: runs.len(),
        reached: runs.iter().filter(|r| r.reached).count(),
        mean_final_distance: mean(runs.iter().map(|r| r.final_distance as f64)),
        mean_steps: mean(runs.iter().map(|r| r.steps as f64)),
        mean_total_interference_w: mean(runs.iter().map(|r| r.total_interference_w)),
        mean_throughput_bps: mean(runs.iter().map(|r| r.mean_throughput_bps)),
        mean_total_reward: mean(runs.iter().map(|r| r.total_reward)),
    };
    Evaluation { policy_id: policy_id.to_string(), start_cell: start, rows, runs, summary }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnseenEntry {
    pub policy_id: String,
    pub learner: LearnerKind,
    /// Cells visited by the first run, start included.
    pub path: Vec<CellCoord>,
    pub reached: bool,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnseenReport {
    pub start_cell: CellCoord,
    pub entries: Vec<UnseenEntry>,
}

/// Evaluates every artifact from the same perturbed start. A method counts
/// as reaching the destination only if all of its runs do.
pub fn unseen_start_eval(
    artifacts: &[PolicyArtifact],
    scenario: &Scenario,
    start: CellCoord,
    eval_runs: usize,
    master_seed: u64,
) -> Result<UnseenReport, HarnessError> {
    let mut entries = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let evaluation = evaluate(a, scenario, eval_runs, Some(start), master_seed, None)?;
        entries.push(UnseenEntry {
            policy_id: a.id.clone(),
            learner: a.learner,
            path: evaluation.runs[0].path.clone(),
            reached: evaluation.summary.reached == evaluation.summary.runs,
            evaluation,
        });
    }
    Ok(UnseenReport { start_cell: start, entries })
}

/// Twelve significant digits.
fn sig12(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in rows {
        let vals = [r.throughput_mean, r.throughput_std, r.interference_mean, r.interference_std, r.distance, r.reward];
        s.push_str(&r.index.to_string());
        for v in vals {
            s.push(',');
            s.push_str(&sig12(v));
        }
        s.push('\n');
    }
    s
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err("missing or unexpected header".into());
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(format!("row {}: expected 7 columns, got {}", i + 1, cols.len()));
            }
            let num = |j: usize| cols[j].parse::<f64>().map_err(|e| format!("row {}, column {j}: {e}", i + 1));
            Ok(MetricsRow {
                index: cols[0].parse().map_err(|e| format!("row {}: {e}", i + 1))?,
                throughput_mean: num(1)?,
                throughput_std: num(2)?,
                interference_mean: num(3)?,
                interference_std: num(4)?,
                distance: num(5)?,
                reward: num(6)?,
            })
        })
        .collect()
}

pub fn export_metrics(rows: &[MetricsRow], path: &Path) -> Result<(), HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::InvalidConfig("no metrics rows to export".into()));
    }
    fs::write(path, metrics_csv(rows)).map_err(io_err(path))
}
