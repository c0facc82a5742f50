//! `uavirl`: generate scenarios and demonstrations, train and evaluate
//! policies, and run the demonstration server.
//!
//! Exit status: 0 on success, 2 for configuration or input errors, 3 when
//! the numerics fail (diverging training, solver breakdown).

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use uavirl_core::demo::SessionManager;
use uavirl_core::harness::{self, HarnessError, LearnerKind, PolicyArtifact, RunConfig};
use uavirl_core::irl::IrlError;
use uavirl_core::learn::TrainError;
use uavirl_core::trajectories::TrajectoryStore;
use uavirl_core::world::build_scenario;
use uavirl_core::{CellCoord, ChannelMode, RewardWeights, Scenario, ScenarioConfig};

/// Seed for UE placement when no scenario file is given.
const DEFAULT_SCENARIO_SEED: u64 = 42;
/// Row-major index of the perturbed start cell for unseen-start runs.
const UNSEEN_START_BS: usize = 5;

#[derive(Parser)]
#[command(name = "uavirl", version, about = "Interference-aware UAV path and power planning by apprenticeship learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario JSON written by `scenario gen`; the built-in default layout when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// probabilistic or los; defaults to the scenario file's mode (probabilistic for the built-in layout).
    #[arg(long, value_parser = parse_channel)]
    channel: Option<ChannelMode>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Use the full 10^4-episode training budget instead of the quick 2000.
    #[arg(long)]
    full: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Scenario files.
    Scenario {
        #[command(subcommand)]
        action: ScenarioCmd,
    },
    /// Scripted expert demonstrations.
    Expert {
        #[command(subcommand)]
        action: ExpertCmd,
    },
    /// Train a learner and write its artifacts to --out.
    Train(TrainArgs),
    /// Averaged greedy rollouts of a policy artifact.
    Eval(EvalArgs),
    /// Compare policies from a start cell the expert never visited.
    UnseenEval(UnseenArgs),
    /// HTTP+JSON server for demonstrations and playback.
    Serve(ServeArgs),
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Build a scenario (UE placement seeded by --seed) and write scenario.json.
    Gen {
        /// Optional JSON scenario config overriding the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum ExpertCmd {
    /// Write scripted expert trajectories into the --out trajectory store.
    Gen {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// irl-lfa, irl-dqn, bc, shortest or random
    #[arg(value_parser = parse_learner)]
    learner: LearnerKind,
    /// Trajectory store with demonstrations; scripted experts are generated when omitted.
    #[arg(long)]
    experts: Option<PathBuf>,
    #[arg(long)]
    num_eps: Option<u32>,
    #[arg(long)]
    eps_irl: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    n_experts: Option<usize>,
    /// Step size of the learner (SGD for irl-lfa, Adam for irl-dqn).
    #[arg(long)]
    learning_rate: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EvalArgs {
    /// policy.json written by `train`.
    #[arg(long)]
    policy: PathBuf,
    #[arg(long, default_value_t = 25)]
    runs: usize,
    /// Start from this row-major cell index instead of the source.
    #[arg(long)]
    start_bs: Option<usize>,
    /// Reward weights (weights.json or an IRL policy.json) for the reward column.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct UnseenArgs {
    /// One or more policy.json files.
    #[arg(long = "policy", required = true)]
    policies: Vec<PathBuf>,
    #[arg(long, default_value_t = UNSEEN_START_BS)]
    start_bs: usize,
    #[arg(long, default_value_t = 25)]
    runs: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Policy artifacts to offer for playback.
    #[arg(long = "policy")]
    policies: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn parse_channel(s: &str) -> Result<ChannelMode, String> {
    s.parse()
}

fn parse_learner(s: &str) -> Result<LearnerKind, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numeric = err.chain().any(|cause| {
        if let Some(h) = cause.downcast_ref::<HarnessError>() {
            return h.is_numeric();
        }
        matches!(cause.downcast_ref::<TrainError>(), Some(TrainError::NonFinite { .. }))
            || matches!(cause.downcast_ref::<IrlError>(), Some(IrlError::Qp(_) | IrlError::Train(TrainError::NonFinite { .. })))
    });
    if numeric {
        3
    } else {
        2
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scenario { action: ScenarioCmd::Gen { config, common } } => scenario_gen(config.as_deref(), &common),
        Command::Expert { action: ExpertCmd::Gen { n, common } } => expert_gen(n, &common),
        Command::Train(args) => train(args),
        Command::Eval(args) => eval(args),
        Command::UnseenEval(args) => unseen_eval(args),
        Command::Serve(args) => serve(args),
    }
}

/// The run's scenario: the file (or default layout) in the requested channel mode.
fn load_scenario(common: &Common) -> Result<Scenario> {
    let base = match &common.scenario {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Scenario::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => build_scenario(&ScenarioConfig::default(), DEFAULT_SCENARIO_SEED)?,
    };
    match common.channel {
        Some(mode) => Ok(base.with_channel_mode(mode)?),
        None => Ok(base),
    }
}

fn cell_of(scenario: &Scenario, index: usize) -> Result<CellCoord> {
    scenario
        .grid()
        .cell(index)
        .ok_or_else(|| anyhow!(HarnessError::InvalidConfig(format!("cell index {index} is outside the {}-cell grid", scenario.num_cells()))))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn scenario_gen(config: Option<&Path>, common: &Common) -> Result<()> {
    let cfg = match config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ScenarioConfig::default(),
    };
    let sc = build_scenario(&cfg, common.seed)?.with_channel_mode(common.channel.unwrap_or(ChannelMode::Probabilistic))?;
    fs::create_dir_all(&common.out)?;
    let path = common.out.join("scenario.json");
    fs::write(&path, sc.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
    println!("scenario {} -> {}", sc.id(), path.display());
    Ok(())
}

fn expert_gen(n: usize, common: &Common) -> Result<()> {
    if n == 0 {
        bail!(HarnessError::InvalidConfig("--n must be at least 1".into()));
    }
    let sc = load_scenario(common)?;
    let store = TrajectoryStore::open(&common.out)?;
    for t in harness::scripted_experts(&sc, n)? {
        let id = store.save(&t)?;
        println!("{id}");
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let common = &args.common;
    let sc = load_scenario(common)?;
    let mut cfg = if common.full { RunConfig::full(args.learner) } else { RunConfig::desk(args.learner) };
    cfg.channel = sc.channel.channel_mode;
    cfg.master_seed = common.seed;
    if let Some(v) = args.num_eps {
        cfg.num_eps = v;
    }
    if let Some(v) = args.eps_irl {
        cfg.eps_irl = v;
    }
    if let Some(v) = args.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = args.n_experts {
        cfg.n_experts = v;
    }
    cfg.learning_rate = args.learning_rate;
    let experts = match &args.experts {
        Some(dir) => Some(TrajectoryStore::open(dir)?.load_all()?),
        None => None,
    };

    let is_irl = matches!(cfg.learner, LearnerKind::IrlLfa | LearnerKind::IrlDqn);
    if is_irl {
        println!("{:>4}  {:>12}  {:>12}", "iter", "D", "l2 gap");
    }
    let out = harness::run_training(&sc, experts.as_deref(), &cfg, &common.out, |e| {
        println!("{:>4}  {:>12.6}  {:>12.6}", e.iter, e.hyper_distance, e.l2_gap);
    })?;
    if let Some(irl) = &out.irl {
        println!(
            "termination: {:?} after {} iterations; best iteration {} (D = {:.6})",
            irl.termination, irl.iterations, irl.best_iter, irl.best_hyper_distance
        );
    }
    if let Some(bc) = &out.bc {
        println!(
            "held-out accuracy {:.4} ({} train / {} test, split seed {}); tree depth {}, {} leaves",
            bc.accuracy, bc.train_size, bc.test_size, bc.split_seed, bc.depth, bc.leaves
        );
    }
    println!("policy {}", out.artifact.id);
    for f in &out.files {
        println!("  {}", f.display());
    }
    Ok(())
}

fn load_weights(path: &Path) -> Result<RewardWeights> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(w) = serde_json::from_str::<RewardWeights>(&text) {
        return Ok(w);
    }
    let art = PolicyArtifact::from_json(&text).map_err(|reason| HarnessError::Parse { path: path.to_path_buf(), reason })?;
    art.weights.ok_or_else(|| anyhow!(HarnessError::InvalidConfig(format!("{} carries no reward weights", path.display()))))
}

fn eval(args: EvalArgs) -> Result<()> {
    let common = &args.common;
    let sc = load_scenario(common)?;
    let art = PolicyArtifact::load(&args.policy)?;
    let start = args.start_bs.map(|i| cell_of(&sc, i)).transpose()?;
    let weights = args.weights.as_deref().map(load_weights).transpose()?;
    let ev = harness::evaluate(&art, &sc, args.runs, start, common.seed, weights.as_ref())?;
    fs::create_dir_all(&common.out)?;
    harness::export_metrics(&ev.rows, &common.out.join("metrics.csv"))?;
    write_json(&common.out.join("eval.json"), &ev)?;
    let s = &ev.summary;
    println!("policy {} from {}", ev.policy_id, ev.start_cell);
    println!(
        "reached {}/{}; mean final distance {:.3}; mean steps {:.2}; mean aggregate interference {:.6e} W; mean throughput {:.6e} bit/s",
        s.reached, s.runs, s.mean_final_distance, s.mean_steps, s.mean_total_interference_w, s.mean_throughput_bps
    );
    Ok(())
}

fn unseen_eval(args: UnseenArgs) -> Result<()> {
    let common = &args.common;
    let sc = load_scenario(common)?;
    let start = cell_of(&sc, args.start_bs)?;
    let arts = args.policies.iter().map(|p| PolicyArtifact::load(p)).collect::<Result<Vec<_>, _>>()?;
    let report = harness::unseen_start_eval(&arts, &sc, start, args.runs, common.seed)?;
    fs::create_dir_all(&common.out)?;
    write_json(&common.out.join("unseen_report.json"), &report)?;
    println!("start cell BS{} {}", args.start_bs, start);
    for e in &report.entries {
        let path: Vec<String> = e.path.iter().map(|c| format!("{:?}", c.to_offset())).collect();
        println!(
            "{:>8}  reached {:<5}  ({}/{})  {}",
            e.learner.as_str(),
            e.reached,
            e.evaluation.summary.reached,
            e.evaluation.summary.runs,
            path.join(" ")
        );
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let common = &args.common;
    let sc = load_scenario(common)?;
    let store = TrajectoryStore::open(common.out.join("trajectories"))?;
    let mut mgr = SessionManager::new(store);
    let sid = mgr.add_scenario(Some(uavirl_service::DEFAULT_SCENARIO), sc);
    for p in &args.policies {
        mgr.add_policy(PolicyArtifact::load(p)?).with_context(|| format!("registering {}", p.display()))?;
    }
    println!("serving scenario {sid} on http://{}", args.addr);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(uavirl_service::serve(Arc::new(mgr), args.addr))?;
    Ok(())
}
