//! Phase-3 validation: route synthetic circuits on the merged multi-chip
//! graph with deterministic SWAP insertion and report overhead and
//! estimated fidelity.
//!
//! The router is intentionally simple: for each two-qubit gate on
//! non-adjacent physical qubits it walks the first operand along a hop-count
//! shortest path toward the second (ties broken by smallest node label),
//! inserting a SWAP per edge, then executes the gate. Fidelity compounds
//! `(1−ε)` per executed gate with SWAPs counted as three CNOTs.

use std::collections::HashMap;

use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::LinkSet;
use crate::device::{ChipGraph, CouplerSpec};
use crate::error::{Error, Result};

/// A layered circuit: each layer is a set of disjoint two-qubit gates over
/// logical qubit indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub num_qubits: usize,
    pub layers: Vec<Vec<(u32, u32)>>,
}

impl Circuit {
    pub fn validate(&self) -> Result<()> {
        for (li, layer) in self.layers.iter().enumerate() {
            let mut used = std::collections::HashSet::new();
            for &(a, b) in layer {
                if a == b || a as usize >= self.num_qubits || b as usize >= self.num_qubits {
                    return Err(Error::validation(
                        "layers",
                        format!("bad gate ({a}, {b}) in layer {li}"),
                    ));
                }
                if !used.insert(a) || !used.insert(b) {
                    return Err(Error::validation(
                        "layers",
                        format!("qubit reused within layer {li}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.len()).sum()
    }
}

/// Random layered circuit: each layer is a uniformly random maximal
/// matching (⌊n/2⌋ gates), deterministic per seed.
pub fn random_circuit(num_qubits: usize, depth: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(depth);
    let mut order: Vec<u32> = (0..num_qubits as u32).collect();
    for _ in 0..depth {
        order.shuffle(&mut rng);
        let mut layer: Vec<(u32, u32)> = order
            .chunks_exact(2)
            .map(|pair| (pair[0].min(pair[1]), pair[0].max(pair[1])))
            .collect();
        layer.sort_unstable();
        layers.push(layer);
    }
    Circuit { num_qubits, layers }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeKind {
    OnChip { gate_time_ns: f64, gate_error: f64 },
    InterChip { latency_ns: f64, error: f64 },
}

impl EdgeKind {
    pub fn error(&self) -> f64 {
        match self {
            EdgeKind::OnChip { gate_error, .. } => *gate_error,
            EdgeKind::InterChip { error, .. } => *error,
        }
    }

    pub fn is_inter_chip(&self) -> bool {
        matches!(self, EdgeKind::InterChip { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemEdge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
}

/// Disjoint union of chip graphs plus tagged coupler edges. Nodes are
/// labelled `(chip index, qubit id)` and numbered chip by chip.
#[derive(Debug, Clone)]
pub struct SystemGraph {
    labels: Vec<(usize, u32)>,
    edges: Vec<SystemEdge>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl SystemGraph {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[(usize, u32)] {
        &self.labels
    }

    pub fn edges(&self) -> &[SystemEdge] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn node(&self, chip: usize, qubit: u32) -> Option<usize> {
        self.labels.iter().position(|&l| l == (chip, qubit))
    }

    pub fn is_connected(&self) -> bool {
        let n = self.labels.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    fn hop_matrix(&self) -> Vec<Vec<u32>> {
        let n = self.len();
        let mut matrix = Vec::with_capacity(n);
        for s in 0..n {
            let mut dist = vec![u32::MAX; n];
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adjacency[u] {
                    if dist[v] == u32::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            matrix.push(dist);
        }
        matrix
    }
}

/// Merges a chain of chips with their selected link sets. `link_sets[i]`
/// connects `chips[i]` to `chips[i+1]`; coupler properties come from
/// `specs[i]`.
pub fn merge_system(
    chips: &[ChipGraph],
    link_sets: &[LinkSet],
    specs: &[CouplerSpec],
) -> Result<SystemGraph> {
    if link_sets.len() != chips.len().saturating_sub(1) || specs.len() != link_sets.len() {
        return Err(Error::validation(
            "link_sets",
            "need one link set and one coupler spec per adjacent chip pair",
        ));
    }
    let mut labels = Vec::new();
    let mut node_of: HashMap<(usize, u32), usize> = HashMap::new();
    for (ci, chip) in chips.iter().enumerate() {
        for q in chip.qubits() {
            node_of.insert((ci, q.id), labels.len());
            labels.push((ci, q.id));
        }
    }
    let mut edges = Vec::new();
    for (ci, chip) in chips.iter().enumerate() {
        for e in chip.edges() {
            edges.push(SystemEdge {
                a: node_of[&(ci, e.a)],
                b: node_of[&(ci, e.b)],
                kind: EdgeKind::OnChip {
                    gate_time_ns: e.gate_time_ns,
                    gate_error: e.gate_error,
                },
            });
        }
    }
    for (pi, set) in link_sets.iter().enumerate() {
        for &(u, v) in &set.pairs {
            let a = *node_of
                .get(&(pi, u))
                .ok_or_else(|| Error::validation("pairs", format!("dangling endpoint {u} on chip {pi}")))?;
            let b = *node_of
                .get(&(pi + 1, v))
                .ok_or_else(|| {
                    Error::validation("pairs", format!("dangling endpoint {v} on chip {}", pi + 1))
                })?;
            edges.push(SystemEdge {
                a,
                b,
                kind: EdgeKind::InterChip {
                    latency_ns: specs[pi].latency_ns,
                    error: specs[pi].error,
                },
            });
        }
    }
    let mut adjacency = vec![Vec::new(); labels.len()];
    for (eidx, e) in edges.iter().enumerate() {
        adjacency[e.a].push((e.b, eidx));
        adjacency[e.b].push((e.a, eidx));
    }
    for nbrs in &mut adjacency {
        nbrs.sort_unstable();
    }
    Ok(SystemGraph {
        labels,
        edges,
        adjacency,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Gate,
    Swap,
}

/// One executed two-qubit operation on a physical edge of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutedOp {
    pub kind: OpKind,
    pub edge: usize,
    pub nodes: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingMetrics {
    pub on_chip_swaps: u32,
    pub inter_chip_ops: u32,
    pub routed_depth: u32,
    pub est_fidelity: f64,
}

#[derive(Debug, Clone)]
pub struct RoutedCircuit {
    pub metrics: RoutingMetrics,
    pub ops: Vec<RoutedOp>,
    pub final_layout: Vec<usize>,
}

/// Routes a circuit on the system with SWAP insertion.
///
/// `layout` maps logical qubits to physical node indices; identity packing
/// (logical i on node i) when omitted. Deterministic: shortest-path ties
/// break toward the smallest next node label.
pub fn route_circuit(
    circuit: &Circuit,
    system: &SystemGraph,
    layout: Option<Vec<usize>>,
) -> Result<RoutedCircuit> {
    circuit.validate()?;
    if !system.is_connected() {
        return Err(Error::Disconnected(
            "system graph is not connected; every adjacent chip pair needs >= 1 link".into(),
        ));
    }
    if circuit.num_qubits > system.len() {
        return Err(Error::validation(
            "num_qubits",
            format!("{} logical qubits > {} physical nodes", circuit.num_qubits, system.len()),
        ));
    }
    let mut phys_of: Vec<usize> = layout.unwrap_or_else(|| (0..circuit.num_qubits).collect());
    if phys_of.len() != circuit.num_qubits {
        return Err(Error::validation("layout", "layout length != num_qubits"));
    }
    let mut log_of: Vec<Option<usize>> = vec![None; system.len()];
    for (l, &p) in phys_of.iter().enumerate() {
        if p >= system.len() || log_of[p].is_some() {
            return Err(Error::validation("layout", "layout must be injective into the node set"));
        }
        log_of[p] = Some(l);
    }

    let hops = system.hop_matrix();
    let mut ops = Vec::new();
    let mut on_chip_swaps = 0u32;
    let mut inter_chip_ops = 0u32;
    let mut fidelity = 1.0f64;
    let mut node_depth = vec![0u32; system.len()];

    let mut execute = |kind: OpKind,
                       a: usize,
                       b: usize,
                       edge: usize,
                       system: &SystemGraph,
                       ops: &mut Vec<RoutedOp>,
                       node_depth: &mut Vec<u32>| {
        let ek = system.edges()[edge].kind;
        let eps = ek.error();
        match kind {
            OpKind::Swap => {
                // SWAP decomposes into three CNOTs
                fidelity *= (1.0 - eps).powi(3);
                if ek.is_inter_chip() {
                    inter_chip_ops += 1;
                } else {
                    on_chip_swaps += 1;
                }
            }
            OpKind::Gate => {
                fidelity *= 1.0 - eps;
                if ek.is_inter_chip() {
                    inter_chip_ops += 1;
                }
            }
        }
        let d = node_depth[a].max(node_depth[b]) + 1;
        node_depth[a] = d;
        node_depth[b] = d;
        ops.push(RoutedOp {
            kind,
            edge,
            nodes: (a, b),
        });
    };

    for layer in &circuit.layers {
        for &(la, lb) in layer {
            let mut pa = phys_of[la as usize];
            let pb = phys_of[lb as usize];
            while hops[pa][pb] > 1 {
                // step toward pb: neighbor one hop closer, smallest label
                let (next, edge) = *system
                    .neighbors(pa)
                    .iter()
                    .find(|&&(v, _)| hops[v][pb] == hops[pa][pb] - 1)
                    .expect("connected graph has a descending neighbor");
                execute(OpKind::Swap, pa, next, edge, system, &mut ops, &mut node_depth);
                // update the logical<->physical maps
                let moving = log_of[pa];
                let displaced = log_of[next];
                log_of[next] = moving;
                log_of[pa] = displaced;
                if let Some(l) = moving {
                    phys_of[l] = next;
                }
                if let Some(l) = displaced {
                    phys_of[l] = pa;
                }
                pa = next;
            }
            let &(_, edge) = system
                .neighbors(pa)
                .iter()
                .find(|&&(v, _)| v == pb)
                .expect("operands adjacent after routing");
            execute(OpKind::Gate, pa, pb, edge, system, &mut ops, &mut node_depth);
        }
    }

    Ok(RoutedCircuit {
        metrics: RoutingMetrics {
            on_chip_swaps,
            inter_chip_ops,
            routed_depth: node_depth.iter().copied().max().unwrap_or(0),
            est_fidelity: fidelity,
        },
        ops,
        final_layout: phys_of,
    })
}

/// Product of per-gate success probabilities over a routed gate list, with
/// SWAPs counted as three CNOTs.
pub fn estimate_fidelity(ops: &[RoutedOp], system: &SystemGraph) -> f64 {
    ops.iter()
        .map(|op| {
            let eps = system.edges()[op.edge].kind.error();
            match op.kind {
                OpKind::Swap => (1.0 - eps).powi(3),
                OpKind::Gate => 1.0 - eps,
            }
        })
        .product()
}

/// One placement under comparison: a label, its chain link sets, and its
/// already-evaluated total cost.
#[derive(Debug, Clone)]
pub struct PlacementEntry {
    pub label: String,
    pub link_sets: Vec<LinkSet>,
    pub cost: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacementReport {
    pub label: String,
    pub cost: f64,
    pub mean_overhead: f64,
    pub std_overhead: f64,
    pub mean_fidelity: f64,
    /// Combined overhead (on-chip SWAPs + inter-chip ops) per circuit.
    pub per_circuit_overhead: Vec<f64>,
    pub per_circuit_fidelity: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub placements: Vec<PlacementReport>,
    /// Spearman rank correlation between placement cost and mean overhead;
    /// `None` when undefined (fewer than two distinct values on a side).
    pub spearman: Option<f64>,
}

impl ComparisonReport {
    /// CSV export: `placement,cost,mean_overhead,std_overhead,mean_fidelity`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("placement,cost,mean_overhead,std_overhead,mean_fidelity\n");
        for p in &self.placements {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.label, p.cost, p.mean_overhead, p.std_overhead, p.mean_fidelity
            );
        }
        out
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0; // average rank for ties
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let (mx, sx) = mean_std(&rx);
    let (my, sy) = mean_std(&ry);
    if sx == 0.0 || sy == 0.0 {
        return None;
    }
    let cov = rx
        .iter()
        .zip(&ry)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / rx.len() as f64;
    Some(cov / (sx * sy))
}

/// Routes every circuit of the suite under every placement and reports
/// overhead and fidelity statistics plus the cost↔overhead rank correlation.
pub fn compare_placements(
    chips: &[ChipGraph],
    specs: &[CouplerSpec],
    placements: &[PlacementEntry],
    suite: &[Circuit],
) -> Result<ComparisonReport> {
    let mut reports = Vec::with_capacity(placements.len());
    for entry in placements {
        let system = merge_system(chips, &entry.link_sets, specs)?;
        let mut overheads = Vec::with_capacity(suite.len());
        let mut fidelities = Vec::with_capacity(suite.len());
        for circuit in suite {
            let routed = route_circuit(circuit, &system, None)?;
            overheads.push((routed.metrics.on_chip_swaps + routed.metrics.inter_chip_ops) as f64);
            fidelities.push(routed.metrics.est_fidelity);
        }
        let (mean_overhead, std_overhead) = mean_std(&overheads);
        let (mean_fidelity, _) = mean_std(&fidelities);
        reports.push(PlacementReport {
            label: entry.label.clone(),
            cost: entry.cost,
            mean_overhead,
            std_overhead,
            mean_fidelity,
            per_circuit_overhead: overheads,
            per_circuit_fidelity: fidelities,
        });
    }
    let costs: Vec<f64> = reports.iter().map(|r| r.cost).collect();
    let overheads: Vec<f64> = reports.iter().map(|r| r.mean_overhead).collect();
    let spearman = if suite.is_empty() {
        None
    } else {
        spearman(&costs, &overheads)
    };
    Ok(ComparisonReport {
        placements: reports,
        spearman,
    })
}
