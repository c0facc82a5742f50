//! Independent oracles shared by the oracle tests and the acceptance run.
//! Each check returns a one-line summary on success.

#![allow(dead_code)]

use std::fs;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng as _;

use uavirl_core::channel::{self, ChannelParams, LinkGeometry};
use uavirl_core::dqn::{MlpParams, Sample, LAYER_SIZES};
use uavirl_core::harness::{self, LearnerKind, RunConfig};
use uavirl_core::irl::{self, QpStatus, RewardWeights};
use uavirl_core::seed::rng_for;
use uavirl_core::trajectories::{self, StepRecord, Trajectory, TrajectorySource};
use uavirl_core::world::{self, build_scenario, ScenarioConfig};
use uavirl_core::{Action, CellCoord, ChannelMode, FeatureVector, Scenario};

pub type Check = Result<String, String>;

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

fn close(label: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    let e = rel_err(got, want);
    if e <= tol {
        Ok(())
    } else {
        Err(format!("{label}: got {got:e}, want {want:e} (relative error {e:e})"))
    }
}

// Hand evaluations at 30 significant digits.
const LOS_1KM_DB: f64 = 100.070_599_913_279_623_904;
const NLOS_1KM_DB: f64 = 121.470_599_913_279_623_904;
const NLOS_1M_DB: f64 = 61.470_599_913_279_623_904;
const P_LOS_45_DEG: f64 = 0.779_390_148_286_055_508_964;
const P_LOS_OVERHEAD: f64 = 0.998_328_091_174_784_482_493;
const TOTAL_50_50_DB: f64 = 81.781_350_783_318_224_060;
const RATE_SNR_2000_BPS: f64 = 10_966_505.451_905_741_174;
const UE_SINR: f64 = 0.995_024_875_621_890_547_263;

pub fn channel_goldens() -> Check {
    let tol = 1e-9;
    let mut p = ChannelParams::default();
    let overhead = |d: f64| LinkGeometry::new(0.0, d);
    let g45 = LinkGeometry::new(50.0, 50.0);
    close("LoS at 1 km", channel::pathloss_los(&overhead(1000.0), &p).map_err(|e| e.to_string())?, LOS_1KM_DB, tol)?;
    close("NLoS at 1 km", channel::pathloss_nlos(&overhead(1000.0), &p).map_err(|e| e.to_string())?, NLOS_1KM_DB, tol)?;
    close("NLoS at 1 m", channel::pathloss_nlos(&overhead(1.0), &p).map_err(|e| e.to_string())?, NLOS_1M_DB, tol)?;
    close("LoS probability at 45 deg", channel::p_los(&g45, &p), P_LOS_45_DEG, tol)?;
    close("LoS probability overhead", channel::p_los(&LinkGeometry::new(0.0, 50.0), &p), P_LOS_OVERHEAD, tol)?;
    close("blended loss at 45 deg", channel::pathloss_total(&g45, &p).map_err(|e| e.to_string())?, TOTAL_50_50_DB, tol)?;
    close("gain at 80 dB", channel::channel_gain(80.0, 100.0), 1e-6, tol)?;
    p.noise_power_w = 1e-12;
    close("uplink SNR", channel::snr_uplink(0.2, 1e-8, &p), 2000.0, tol)?;
    close("uplink rate", channel::throughput(0.2, 1e-8, &p), RATE_SNR_2000_BPS, tol)?;
    close("interference", channel::interference_contribution(0.2, 1e-9), 2e-10, tol)?;
    close("UE SINR", channel::ue_sinr_throughput(0.002, 1e-7, 2e-10, &p).0, UE_SINR, tol)?;
    Ok("11 hand-evaluated channel values within 1e-9 relative".into())
}

fn to5(v: [f64; 2]) -> [f64; 5] {
    [v[0], v[1], 0.0, 0.0, 0.0]
}

/// Smallest `|w|^2` over the 1e-3 lattice on [-5, 5]^2 subject to every
/// `a . w >= 1`; `None` when no lattice point is feasible.
fn lattice_minimum(constraints: &[[f64; 2]]) -> Option<f64> {
    const STEPS: i32 = 10_000;
    let coord = |i: i32| -5.0 + f64::from(i) * 1e-3;
    let mut best: Option<f64> = None;
    for i in 0..=STEPS {
        let x = coord(i);
        for j in 0..=STEPS {
            let y = coord(j);
            if constraints.iter().all(|a| a[0] * x + a[1] * y >= 1.0) {
                let v = x * x + y * y;
                if best.is_none_or(|b| v < b) {
                    best = Some(v);
                }
            }
        }
    }
    best
}

/// Min-norm separating QP against exhaustive lattice search on planar
/// instances with one expert and two learner expectations.
pub fn qp_lattice(seed: u64, want_feasible: usize, want_infeasible: usize) -> Check {
    let mut rng = rng_for(seed, "qp-oracle", 0);
    let (mut feasible, mut infeasible) = (0, 0);
    let mut attempts = 0;
    while feasible < want_feasible || infeasible < want_infeasible {
        attempts += 1;
        if attempts > 1000 {
            return Err(format!("only {feasible} feasible / {infeasible} infeasible instances in 1000 draws"));
        }
        let mut draw = || [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let (expert, l1, l2) = (draw(), draw(), draw());
        let sol = irl::solve_min_norm_svm(&to5(expert), &[to5(l1), to5(l2)]).map_err(|e| e.to_string())?;
        let constraints = [expert, [-l1[0], -l1[1]], [-l2[0], -l2[1]]];
        match sol.status {
            QpStatus::Optimal => {
                let value: f64 = sol.w.iter().map(|v| v * v).sum();
                // the lattice cannot resolve optima far from the origin to 1e-2
                if feasible >= want_feasible || value > 4.0 {
                    continue;
                }
                if sol.kkt_residual >= 1e-6 {
                    return Err(format!("KKT residual {:e} on {constraints:?}", sol.kkt_residual));
                }
                let Some(lattice) = lattice_minimum(&constraints) else {
                    return Err(format!("solver optimal but no feasible lattice point for {constraints:?}"));
                };
                if (value - lattice).abs() > 1e-2 {
                    return Err(format!("optimum {value} vs lattice {lattice} for {constraints:?}"));
                }
                feasible += 1;
            }
            QpStatus::Infeasible => {
                if infeasible >= want_infeasible {
                    continue;
                }
                if let Some(v) = lattice_minimum(&constraints) {
                    return Err(format!("solver infeasible but lattice finds |w|^2 = {v} for {constraints:?}"));
                }
                infeasible += 1;
            }
        }
    }
    Ok(format!("{feasible} feasible and {infeasible} infeasible planar QPs agree with lattice search"))
}

fn param_at(p: &mut MlpParams, k: usize) -> &mut f64 {
    p.values_mut().nth(k).expect("parameter index in range")
}

/// Backpropagated gradient against central differences on random batches.
pub fn mlp_finite_differences(seed: u64, draws: usize) -> Check {
    const STEP: f64 = 1e-5;
    let mut worst = 0.0f64;
    for d in 0..draws {
        let mut rng = rng_for(seed, "fd-oracle", d as u64);
        let params = MlpParams::glorot(&LAYER_SIZES, &mut rng);
        let inputs: Vec<Vec<f64>> = (0..3).map(|_| (0..LAYER_SIZES[0]).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let batch: Vec<Sample> = inputs
            .iter()
            .map(|x| Sample {
                input: x,
                action: rng.gen_range(0..LAYER_SIZES[3]),
                target: rng.gen_range(-2.0..2.0),
            })
            .collect();
        let (grads, _) = params.backward(&batch);
        let analytic: Vec<f64> = grads.values().copied().collect();
        let mut probe = params.clone();
        for (k, &g) in analytic.iter().enumerate() {
            let orig = *param_at(&mut probe, k);
            *param_at(&mut probe, k) = orig + STEP;
            let up = probe.loss(&batch);
            *param_at(&mut probe, k) = orig - STEP;
            let down = probe.loss(&batch);
            *param_at(&mut probe, k) = orig;
            let numeric = (up - down) / (2.0 * STEP);
            let err = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6);
            if err > 1e-4 {
                return Err(format!("draw {d}, parameter {k}: backprop {g:e} vs finite difference {numeric:e}"));
            }
            worst = worst.max(err);
        }
    }
    Ok(format!("{draws} random batches, worst relative gradient error {worst:.1e}"))
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

fn magnitude(r: BigRational) -> BigRational {
    if r < BigRational::from_integer(BigInt::from(0)) {
        -r
    } else {
        r
    }
}

fn synthetic(features: Vec<[f64; 5]>) -> Trajectory {
    let n = features.len();
    let steps = features
        .into_iter()
        .enumerate()
        .map(|(t, phi)| StepRecord {
            t: t as u32,
            cell: CellCoord::from_offset(0, 0),
            action: Action::from_index(0).expect("valid action"),
            features: FeatureVector(phi),
            throughput_bps: 0.0,
            interference_w: 0.0,
            done: t + 1 == n,
        })
        .collect();
    Trajectory { scenario_id: "oracle".into(), source: TrajectorySource::ScriptedExpert, start_cell: CellCoord::from_offset(0, 0), steps }
}

/// Discounted feature expectations against exact rational arithmetic.
pub fn feature_expectation_exact(seed: u64, draws: usize) -> Check {
    let mut rng = rng_for(seed, "mu-oracle", 0);
    let tol = BigRational::new(BigInt::from(1), BigInt::from(10u64.pow(12)));
    for d in 0..draws {
        let gamma = if d % 5 == 0 { 1.0 } else { rng.gen_range(0.5..1.0) };
        let n_trajs = rng.gen_range(1..=4);
        let trajs: Vec<Trajectory> = (0..n_trajs)
            .map(|_| {
                let len = rng.gen_range(1..=5);
                synthetic((0..len).map(|_| std::array::from_fn(|_| rng.gen_range(0.0..1.0))).collect())
            })
            .collect();
        let got = trajectories::feature_expectation(&trajs, gamma).map_err(|e| e.to_string())?;

        let g = exact(gamma);
        let mut want = vec![BigRational::from_integer(BigInt::from(0)); 5];
        for t in &trajs {
            let mut discount = BigRational::from_integer(BigInt::from(1));
            for s in &t.steps {
                for (w, &phi) in want.iter_mut().zip(&s.features.0) {
                    *w += &discount * exact(phi);
                }
                discount *= &g;
            }
        }
        let n = BigRational::from_integer(BigInt::from(n_trajs));
        for (k, w) in want.iter().enumerate() {
            let w = w / &n;
            let diff = magnitude(exact(got[k]) - &w);
            if diff > &tol * magnitude(w).max(BigRational::from_integer(BigInt::from(1))) {
                return Err(format!("draw {d}, component {k}: {} differs from the exact value", got[k]));
            }
        }
    }
    Ok(format!("{draws} random trajectory sets match exact rational sums within 1e-12"))
}

/// `|w . (mu_L - mu_E)| <= |w| |mu_L - mu_E|` on random draws.
pub fn cauchy_schwarz(seed: u64, draws: usize) -> Check {
    let mut rng = rng_for(seed, "cs-oracle", 0);
    let mut tightest = 0.0f64;
    for d in 0..draws {
        let w = RewardWeights(std::array::from_fn(|_| rng.gen_range(-3.0..3.0)));
        let scale = 10f64.powi(rng.gen_range(-3..3));
        let mu_l: [f64; 5] = std::array::from_fn(|_| rng.gen_range(0.0..100.0) * scale);
        let mu_e: [f64; 5] = std::array::from_fn(|_| rng.gen_range(0.0..100.0) * scale);
        let dist = irl::hyper_distance(&w, &mu_l, &mu_e);
        let bound = w.norm() * irl::l2_gap(&mu_l, &mu_e);
        if dist > bound * (1.0 + 1e-12) {
            return Err(format!("draw {d}: distance {dist:e} exceeds bound {bound:e}"));
        }
        if bound > 0.0 {
            tightest = tightest.max(dist / bound);
        }
    }
    Ok(format!("{draws} draws within the Cauchy-Schwarz bound (tightest ratio {tightest:.6})"))
}

/// Probability that a uniformly random walk from the source reaches the
/// destination within the hop budget, by dynamic programming over cells.
pub fn random_walk_success(sc: &Scenario) -> f64 {
    let grid = sc.grid();
    let dest = grid.index_of(sc.dest_cell).expect("on grid");
    let mut mass = vec![0.0; grid.len()];
    mass[grid.index_of(sc.source_cell).expect("on grid")] = 1.0;
    let mut reached = 0.0;
    for _ in 0..sc.dist_limit {
        let mut next = vec![0.0; grid.len()];
        for (i, &m) in mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let here = grid.cell(i).expect("in range");
            for dir in uavirl_core::Direction::ALL {
                next[grid.index_of(grid.neighbor(here, dir)).expect("clamped")] += m / 6.0;
            }
        }
        reached += next[dest];
        next[dest] = 0.0;
        mass = next;
    }
    reached
}

pub fn desk_scenario(mode: ChannelMode) -> Scenario {
    build_scenario(&ScenarioConfig::default(), 42)
        .and_then(|s| s.with_channel_mode(mode))
        .expect("default scenario builds")
}

/// Two identical end-to-end runs must write byte-identical artifacts.
pub fn pipeline_determinism() -> Check {
    let sc = desk_scenario(ChannelMode::Probabilistic);
    let mut compared = 0;
    for learner in [LearnerKind::IrlDqn, LearnerKind::IrlLfa, LearnerKind::Bc] {
        let mut cfg = RunConfig::desk(learner);
        cfg.master_seed = 7;
        cfg.num_eps = 60;
        cfg.max_iters = 2;
        cfg.irl_rollouts = 3;
        let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
        let mut outputs = Vec::new();
        for d in &dirs {
            outputs.push(harness::run_training(&sc, None, &cfg, d.path(), |_| {}).map_err(|e| e.to_string())?);
        }
        for (a, b) in outputs[0].files.iter().zip(&outputs[1].files) {
            let (x, y) = (fs::read(a).map_err(|e| e.to_string())?, fs::read(b).map_err(|e| e.to_string())?);
            if x != y {
                return Err(format!("{learner}: {} differs between runs", a.file_name().unwrap().to_string_lossy()));
            }
            compared += 1;
        }
        let ev = |o: &harness::TrainingOutput| harness::evaluate(&o.artifact, &sc, 3, None, 7, None).map(|e| harness::metrics_csv(&e.rows));
        if ev(&outputs[0]).map_err(|e| e.to_string())? != ev(&outputs[1]).map_err(|e| e.to_string())? {
            return Err(format!("{learner}: evaluation series differ"));
        }
    }
    Ok(format!("{compared} artifact files byte-identical across repeated runs"))
}

/// Per-cell entry cost of the expert, computed from the world model.
pub fn entry_costs(sc: &Scenario, interference_weight: f64, hop_weight: f64) -> Vec<Option<f64>> {
    sc.grid()
        .cells()
        .map(|c| {
            sc.power_levels_w
                .iter()
                .find(|&&p| world::link_metrics(sc, c, p).expect("valid cell").throughput_bps >= sc.throughput_threshold_bps)
                .map(|&p| {
                    interference_weight * world::aggregate_interference(sc, c, p).expect("valid cell") / sc.norm.i_max_w + hop_weight
                })
        })
        .collect()
}
