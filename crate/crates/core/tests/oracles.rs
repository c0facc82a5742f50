mod support;

use proptest::prelude::*;
use rand::Rng as _;

use uavirl_core::bc::{self, ExpertOracleConfig};
use uavirl_core::policy::{self, PolicyModel};
use uavirl_core::seed::rng_for;
use uavirl_core::world::{build_scenario, ScenarioConfig};
use uavirl_core::ChannelMode;

fn check(result: support::Check) {
    match result {
        Ok(msg) => println!("{msg}"),
        Err(msg) => panic!("{msg}"),
    }
}

#[test]
fn channel_hand_evaluations() {
    check(support::channel_goldens());
}

#[test]
fn qp_matches_lattice_search() {
    check(support::qp_lattice(11, 10, 4));
}

#[test]
fn backprop_matches_finite_differences() {
    check(support::mlp_finite_differences(3, 10));
}

#[test]
fn feature_expectation_matches_exact_sums() {
    check(support::feature_expectation_exact(5, 300));
}

#[test]
fn hyper_distance_respects_cauchy_schwarz() {
    check(support::cauchy_schwarz(9, 10_000));
}

#[test]
fn training_is_bit_deterministic() {
    check(support::pipeline_determinism());
}

// Probability that one uniformly random episode on the default layout
// reaches the destination within 15 hops.
const RANDOM_SUCCESS: f64 = 0.035_500_899_425_898_04;

#[test]
fn random_walk_success_probability() {
    let sc = support::desk_scenario(ChannelMode::Probabilistic);
    let p = support::random_walk_success(&sc);
    assert!((p - RANDOM_SUCCESS).abs() < 1e-12, "{p:.17}");

    let n = 20_000;
    let hits = (0..n)
        .filter(|&i| {
            let mut rng = rng_for(77, "mc", i);
            let t = policy::rollout(&sc, &PolicyModel::Random, sc.source_cell, &mut rng).unwrap();
            t.final_cell() == sc.dest_cell
        })
        .count();
    let freq = hits as f64 / n as f64;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!((freq - p).abs() < 4.0 * sigma, "Monte Carlo {freq} vs {p}");
}

/// Cheapest walk from source to destination within the hop budget, by
/// exhaustive enumeration.
fn brute_force_cost(sc: &uavirl_core::Scenario, costs: &[Option<f64>]) -> Option<f64> {
    let grid = sc.grid();
    let dest = grid.index_of(sc.dest_cell).unwrap();
    let mut best: Option<f64> = None;
    let mut stack = vec![(grid.index_of(sc.source_cell).unwrap(), 0u32, 0.0)];
    while let Some((cell, hops, cost)) = stack.pop() {
        if hops > 0 && cell == dest {
            if best.is_none_or(|b| cost < b) {
                best = Some(cost);
            }
            continue;
        }
        if hops == sc.dist_limit {
            continue;
        }
        for (_, next) in grid.neighbors(grid.cell(cell).unwrap()) {
            let ni = grid.index_of(next).unwrap();
            if let Some(c) = costs[ni] {
                stack.push((ni, hops + 1, cost + c));
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expert_route_is_the_cheapest_walk(
        cols in 2u32..=4,
        rows in 2u32..=4,
        limit in 1u32..=6,
        seed in 0u64..1000,
        threshold in 14e6f64..24e6,
        hop_weight in prop_oneof![Just(0.0), 0.01f64..1.0],
        interference_weight in 0.1f64..2.0,
    ) {
        let mut rng = rng_for(seed, "density", 0);
        let cfg = ScenarioConfig {
            grid_cols: cols,
            grid_rows: rows,
            ue_count_per_cell: (0..cols * rows).map(|_| rng.gen_range(0..9)).collect(),
            dist_limit: limit,
            throughput_threshold_bps: threshold,
            ..ScenarioConfig::default()
        };
        let sc = build_scenario(&cfg, seed).unwrap();
        let costs = support::entry_costs(&sc, interference_weight, hop_weight);
        let oracle = brute_force_cost(&sc, &costs);
        let expert_cfg = ExpertOracleConfig { interference_weight, hop_weight, throughput_threshold_bps: None };
        match (bc::expert_path(&sc, &expert_cfg), oracle) {
            (Ok((path, cost)), Some(best)) => {
                prop_assert!((cost - best).abs() <= 1e-12 * best.max(1e-12), "{cost} vs {best}");
                prop_assert_eq!(path[0], sc.source_cell);
                prop_assert_eq!(*path.last().unwrap(), sc.dest_cell);
                prop_assert!(path.len() - 1 <= limit as usize);
                let recomputed = bc::path_cost(&sc, &expert_cfg, &path).unwrap();
                prop_assert!((recomputed - cost).abs() <= 1e-12 * cost.max(1e-12));
            }
            (Err(bc::BcError::NoFeasiblePath { .. }), None) => {}
            (got, want) => prop_assert!(false, "expert {got:?} vs brute force {want:?}"),
        }
    }
}
