#![allow(dead_code)]

use couplink::device::{ChipGraph, EdgeProperties, QubitProperties};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random connected chip: spanning tree plus extra edges, randomized gate
/// times/errors and coordinates. Deterministic per seed.
pub fn random_chip(name: &str, n: usize, seed: u64) -> ChipGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qubits: Vec<QubitProperties> = (0..n as u32)
        .map(|id| QubitProperties {
            id,
            x: rng.gen_range(0.0..10.0),
            y: rng.gen_range(0.0..10.0),
            t1_ns: rng.gen_range(5e4..2e5),
            t2_ns: rng.gen_range(5e4..2e5),
            readout_error: rng.gen_range(0.0..0.05),
        })
        .collect();
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for i in 1..n as u32 {
        let j = rng.gen_range(0..i);
        seen.insert((j, i));
        edges.push(random_edge(&mut rng, j, i));
    }
    let extra = if n > 2 { rng.gen_range(0..n) } else { 0 };
    for _ in 0..extra {
        let a = rng.gen_range(0..n as u32);
        let b = rng.gen_range(0..n as u32);
        let key = (a.min(b), a.max(b));
        if a != b && seen.insert(key) {
            edges.push(random_edge(&mut rng, key.0, key.1));
        }
    }
    ChipGraph::new(name, qubits, edges).expect("random chip is valid by construction")
}

fn random_edge(rng: &mut ChaCha8Rng, a: u32, b: u32) -> EdgeProperties {
    EdgeProperties {
        a,
        b,
        gate_time_ns: rng.gen_range(50.0..500.0),
        gate_error: rng.gen_range(0.0..0.05),
    }
}
