//! Independent-oracle cross-checks: every result here is recomputed by a
//! second algorithmic route that shares no code with the implementation
//! under test.

mod common;

use couplink::cost::{total_cost, Constraints, CostWeights, EvalContext, LinkSet};
use couplink::device::{generate_topology, hop_distances, ChipGraph, CouplerSpec, TopologyKind, TopologyOpts};
use couplink::optimize::exhaustive_select;
use couplink::ttf::{build_cost_matrix, ttf_all_pairs, TtfConfig};

use common::random_chip;

const TOL: f64 = 1e-9;

/// Floyd–Warshall over an explicit dense weight matrix.
fn floyd_warshall(weights: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = weights.len();
    let mut dist = weights.to_vec();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = dist[i][k] + dist[k][j];
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
    dist
}

fn dense_weights(chip: &ChipGraph, lambda: f64) -> Vec<Vec<f64>> {
    let n = chip.len();
    let mut w = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in w.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in chip.edges() {
        let pa = chip.position(e.a).unwrap();
        let pb = chip.position(e.b).unwrap();
        let weight = e.gate_time_ns + lambda * (1.0 / (1.0 - e.gate_error)).ln();
        w[pa][pb] = weight;
        w[pb][pa] = weight;
    }
    w
}

#[test]
fn hop_distances_match_floyd_warshall_on_heavy_hex_27() {
    let chip = generate_topology(TopologyKind::HeavyHex, 27, &TopologyOpts::default()).unwrap();
    let got = hop_distances(&chip);
    let mut unit = dense_weights(&chip, 0.0);
    for row in &mut unit {
        for v in row.iter_mut() {
            if *v > 0.0 && v.is_finite() {
                *v = 1.0;
            }
        }
    }
    for e in chip.edges() {
        let pa = chip.position(e.a).unwrap();
        let pb = chip.position(e.b).unwrap();
        unit[pa][pb] = 1.0;
        unit[pb][pa] = 1.0;
    }
    let expected = floyd_warshall(&unit);
    for i in 0..chip.len() {
        for j in 0..chip.len() {
            assert_eq!(got[i][j] as f64, expected[i][j], "hop mismatch at ({i},{j})");
        }
    }
}

#[test]
fn ttf_all_pairs_matches_floyd_warshall_on_random_chips() {
    let cfg = TtfConfig::default();
    for seed in 0..20 {
        let chip = random_chip("r", 3 + (seed as usize % 8), seed);
        let got = ttf_all_pairs(&chip, &cfg).unwrap();
        let expected = floyd_warshall(&dense_weights(&chip, cfg.lambda));
        for i in 0..chip.len() {
            for j in 0..chip.len() {
                assert!(
                    (got[i][j] - expected[i][j]).abs() < TOL,
                    "TTF mismatch at ({i},{j}) seed {seed}: {} vs {}",
                    got[i][j],
                    expected[i][j]
                );
            }
        }
    }
}

/// Recomputes AvgTTF for one pair from scratch: per-edge log weights,
/// Floyd–Warshall, explicit access/egress averages, coupler term.
fn avg_ttf_from_scratch(
    chip_a: &ChipGraph,
    chip_b: &ChipGraph,
    spec: &CouplerSpec,
    lambda: f64,
    u: u32,
    v: u32,
) -> f64 {
    let da = floyd_warshall(&dense_weights(chip_a, lambda));
    let db = floyd_warshall(&dense_weights(chip_b, lambda));
    let pu = chip_a.position(u).unwrap();
    let pv = chip_b.position(v).unwrap();
    let access: f64 = da.iter().map(|row| row[pu]).sum::<f64>() / chip_a.len() as f64;
    let egress: f64 = db[pv].iter().sum::<f64>() / chip_b.len() as f64;
    let coupler = spec.latency_ns + lambda * (1.0 / (1.0 - spec.error)).ln();
    access + coupler + egress
}

#[test]
fn effective_path_cost_matches_from_scratch_sum() {
    let spec = CouplerSpec::default();
    let cfg = TtfConfig::default();
    for seed in 0..10 {
        let a = random_chip("a", 5, seed);
        let b = random_chip("b", 6, seed + 1000);
        let matrix = build_cost_matrix(&a, &b, &spec, &cfg, None).unwrap();
        let pairs = vec![(0, 0), (2, 3), (4, 5)];
        let links = LinkSet::new(&a, &b, pairs.clone()).unwrap();
        let got = couplink::cost::effective_path_cost(&links, &matrix).unwrap();
        let expected: f64 = pairs
            .iter()
            .map(|&(u, v)| avg_ttf_from_scratch(&a, &b, &spec, cfg.lambda, u, v))
            .sum();
        assert!((got - expected).abs() < 1e-6 * expected.abs(), "seed {seed}");
    }
}

/// Independent enumeration of all 2-subsets of the 9 candidate pairs on two
/// line(3) chips, computing every cost term from first principles.
#[test]
fn exhaustive_k2_matches_independent_enumeration() {
    let opts = TopologyOpts {
        gate_time_ns: 100.0,
        gate_error: 0.01,
        ..TopologyOpts::default()
    };
    let a = generate_topology(TopologyKind::Line, 3, &opts).unwrap();
    let b = generate_topology(TopologyKind::Line, 3, &opts).unwrap();
    let spec = CouplerSpec::default();
    let cfg = TtfConfig::default();
    let matrix = build_cost_matrix(&a, &b, &spec, &cfg, None).unwrap();
    let weights = CostWeights::default();
    let constraints = Constraints::default();
    let ctx = EvalContext::new(&a, &b, &matrix, weights, constraints).unwrap();

    let exact = exhaustive_select(&ctx, 2, None).unwrap();

    // from-scratch evaluation of every feasible 2-subset
    let candidates: Vec<(u32, u32)> = (0..3)
        .flat_map(|u| (0..3).map(move |v| (u as u32, v as u32)))
        .collect();
    let hop = |x: u32, y: u32| (x as i64 - y as i64).unsigned_abs() as f64; // line hops
    let mean_hop = |x: u32| (hop(x, 0) + hop(x, 1) + hop(x, 2)) / 3.0;
    let lambda = cfg.lambda;
    let edge_w = 100.0 + lambda * (1.0 / 0.99f64).ln();
    let line_ttf = |x: u32, y: u32| hop(x, y) * edge_w; // shortest path on a line
    let mean_ttf = |x: u32| (line_ttf(x, 0) + line_ttf(x, 1) + line_ttf(x, 2)) / 3.0;
    let coupler = spec.latency_ns + lambda * (1.0 / (1.0 - spec.error)).ln();

    let mut best: Option<f64> = None;
    let mut subsets = 0;
    for i in 0..candidates.len() {
        for j in (i + 1)..candidates.len() {
            subsets += 1;
            let (u1, v1) = candidates[i];
            let (u2, v2) = candidates[j];
            // feasibility under defaults: coincident endpoints break the
            // strict spacing inequality at delta = 0
            if u1 == u2 || v1 == v2 {
                continue;
            }
            let path = (mean_hop(u1) + mean_hop(v1) + 1.0) + (mean_hop(u2) + mean_hop(v2) + 1.0);
            let effective =
                (mean_ttf(u1) + coupler + mean_ttf(v1)) + (mean_ttf(u2) + coupler + mean_ttf(v2));
            let congestion = 2.0; // all loads are 1
            let overload = 0.0;
            let sparsity = 1.0 / (1.0 + hop(u1, u2) + hop(v1, v2));
            let total = weights.alpha * path
                + weights.beta * effective
                + weights.gamma * congestion
                + weights.delta * overload
                + weights.epsilon * sparsity;
            if best.map_or(true, |c| total < c) {
                best = Some(total);
            }
        }
    }
    assert_eq!(subsets, 36);
    assert!((exact.breakdown.total - best.unwrap()).abs() < 1e-6);
}

#[test]
fn greedy_k1_matches_exhaustive_on_random_instances() {
    for seed in 0..10 {
        let a = random_chip("a", 4, seed);
        let b = random_chip("b", 5, seed + 500);
        let matrix =
            build_cost_matrix(&a, &b, &CouplerSpec::default(), &TtfConfig::default(), None).unwrap();
        let ctx =
            EvalContext::new(&a, &b, &matrix, CostWeights::default(), Constraints::default()).unwrap();
        let greedy = couplink::optimize::greedy_select(&ctx, 1).unwrap();
        let exact = exhaustive_select(&ctx, 1, None).unwrap();
        assert_eq!(greedy.links.pairs, exact.links.pairs, "seed {seed}");
        let recomputed = total_cost(&greedy.links, &ctx).unwrap();
        assert!((recomputed.total - greedy.breakdown.total).abs() < TOL);
    }
}
