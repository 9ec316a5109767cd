//! Time-to-Fidelity (TTF) metrics.
//!
//! TTF folds gate latency and gate error into a single effective delay:
//! an edge costs its gate time plus `λ · ln(1/(1−ε))` nanoseconds, so
//! unreliable gates look slower. All-pairs TTF shortest paths feed the
//! per-pair cost matrix that the link optimizer consumes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::device::{hop_distances, ChipGraph, CouplerSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtfConfig {
    /// Scaling factor λ in ns per nat of log-infidelity.
    pub lambda: f64,
    /// Optional divisor applied to AvgTTF values (e.g. min T1 over both
    /// chips). Disabled by default; values stay in raw nanoseconds.
    pub normalization: Option<f64>,
}

impl Default for TtfConfig {
    fn default() -> Self {
        TtfConfig {
            lambda: 1.0,
            normalization: None,
        }
    }
}

impl TtfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::validation("lambda", "lambda must be > 0"));
        }
        if let Some(norm) = self.normalization {
            if !(norm > 0.0) {
                return Err(Error::validation("normalization", "normalization must be > 0"));
            }
        }
        Ok(())
    }
}

/// TTF weight of a single gate edge: `t + λ·ln(1/(1−ε))`.
pub fn ttf_edge_weight(gate_time_ns: f64, gate_error: f64, lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gate_error) {
        return Err(Error::Domain(format!(
            "gate_error {gate_error} outside [0,1) yields infinite TTF"
        )));
    }
    Ok(gate_time_ns + lambda * -f64::ln_1p(-gate_error))
}

/// TTF of one inter-chip coupler traversal.
pub fn coupler_ttf(spec: &CouplerSpec, cfg: &TtfConfig) -> Result<f64> {
    ttf_edge_weight(spec.latency_ns, spec.error, cfg.lambda)
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then node for determinism
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from one source over TTF edge weights, indexed by position.
fn ttf_single_source(chip: &ChipGraph, weights: &[f64], source: usize) -> Vec<f64> {
    let n = chip.len();
    let mut dist = vec![f64::INFINITY; n];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, eidx) in chip.neighbors(u) {
            let nd = d + weights[eidx];
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapEntry { dist: nd, node: v });
            }
        }
    }
    dist
}

/// All-pairs TTF shortest-path matrix, indexed by qubit position.
pub fn ttf_all_pairs(chip: &ChipGraph, cfg: &TtfConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let weights: Vec<f64> = chip
        .edges()
        .iter()
        .map(|e| ttf_edge_weight(e.gate_time_ns, e.gate_error, cfg.lambda))
        .collect::<Result<_>>()?;
    Ok((0..chip.len())
        .map(|s| ttf_single_source(chip, &weights, s))
        .collect())
}

/// Mean TTF from all qubits of the chip into `node` (Eqs. for access/egress
/// averages); the self term contributes 0.
pub fn avg_access_cost(chip: &ChipGraph, node: u32, ttf: &[Vec<f64>]) -> Result<f64> {
    let pos = chip
        .position(node)
        .ok_or_else(|| Error::validation("node", format!("qubit {node} not on chip {}", chip.name())))?;
    let sum: f64 = ttf.iter().map(|row| row[pos]).sum();
    Ok(sum / chip.len() as f64)
}

/// Precomputed per-candidate-pair costs between two chips.
///
/// `avg_ttf(u,v)` composes mean access on chip A, the coupler TTF, and mean
/// egress on chip B; `path(u,v)` is the mean hop distance analogue plus 1
/// for the inter-chip hop itself.
#[derive(Debug, Clone)]
pub struct PairCostMatrix {
    ids_b: Vec<u32>,
    // dense (pos_a, pos_b) tables; NaN marks non-candidates
    avg_ttf: Vec<f64>,
    path: Vec<f64>,
    candidates: Vec<(u32, u32)>,
    pos_a: std::collections::HashMap<u32, usize>,
    pos_b: std::collections::HashMap<u32, usize>,
}

impl PairCostMatrix {
    fn cell(&self, u: u32, v: u32) -> Option<usize> {
        let pa = *self.pos_a.get(&u)?;
        let pb = *self.pos_b.get(&v)?;
        let idx = pa * self.ids_b.len() + pb;
        if self.avg_ttf[idx].is_nan() {
            None
        } else {
            Some(idx)
        }
    }

    /// AvgTTF for a candidate pair, `None` outside the candidate set.
    pub fn avg_ttf(&self, u: u32, v: u32) -> Option<f64> {
        self.cell(u, v).map(|i| self.avg_ttf[i])
    }

    /// Mean-hop path value for a candidate pair.
    pub fn path(&self, u: u32, v: u32) -> Option<f64> {
        self.cell(u, v).map(|i| self.path[i])
    }

    /// Admissible pairs in lexicographic (u, v) order.
    pub fn candidates(&self) -> &[(u32, u32)] {
        &self.candidates
    }

    /// CSV export: `u,v,path_hops,avg_ttf_ns`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,v,path_hops,avg_ttf_ns\n");
        for &(u, v) in &self.candidates {
            let idx = self.cell(u, v).expect("candidate cell");
            let _ = writeln!(out, "{u},{v},{},{}", self.path[idx], self.avg_ttf[idx]);
        }
        out
    }
}

/// Phase-1 preprocessing: builds the per-pair cost matrix for a chip pair.
///
/// `candidates` restricts the admissible (u, v) pairs; all of `V_A × V_B`
/// when `None`.
pub fn build_cost_matrix(
    chip_a: &ChipGraph,
    chip_b: &ChipGraph,
    spec: &CouplerSpec,
    cfg: &TtfConfig,
    candidates: Option<&[(u32, u32)]>,
) -> Result<PairCostMatrix> {
    cfg.validate()?;
    let ttf_a = ttf_all_pairs(chip_a, cfg)?;
    let ttf_b = ttf_all_pairs(chip_b, cfg)?;
    let hops_a = hop_distances(chip_a);
    let hops_b = hop_distances(chip_b);
    let c_ttf = coupler_ttf(spec, cfg)?;
    let norm = cfg.normalization.unwrap_or(1.0);

    let mean_ttf_a: Vec<f64> = (0..chip_a.len())
        .map(|p| ttf_a.iter().map(|row| row[p]).sum::<f64>() / chip_a.len() as f64)
        .collect();
    let mean_ttf_b: Vec<f64> = (0..chip_b.len())
        .map(|p| ttf_b.iter().map(|row| row[p]).sum::<f64>() / chip_b.len() as f64)
        .collect();
    let mean_hop_a: Vec<f64> = (0..chip_a.len())
        .map(|p| hops_a[p].iter().map(|&d| d as f64).sum::<f64>() / chip_a.len() as f64)
        .collect();
    let mean_hop_b: Vec<f64> = (0..chip_b.len())
        .map(|p| hops_b[p].iter().map(|&d| d as f64).sum::<f64>() / chip_b.len() as f64)
        .collect();

    let na = chip_a.len();
    let nb = chip_b.len();
    let mut avg_ttf = vec![f64::NAN; na * nb];
    let mut path = vec![f64::NAN; na * nb];
    let mut pairs: Vec<(u32, u32)> = match candidates {
        Some(list) => list.to_vec(),
        None => {
            let mut all = Vec::with_capacity(na * nb);
            for qa in chip_a.qubits() {
                for qb in chip_b.qubits() {
                    all.push((qa.id, qb.id));
                }
            }
            all
        }
    };
    pairs.sort_unstable();
    pairs.dedup();
    if pairs.is_empty() {
        return Err(Error::validation("candidates", "empty candidate set"));
    }
    for &(u, v) in &pairs {
        let pa = chip_a
            .position(u)
            .ok_or_else(|| Error::validation("candidates", format!("qubit {u} not on chip A")))?;
        let pb = chip_b
            .position(v)
            .ok_or_else(|| Error::validation("candidates", format!("qubit {v} not on chip B")))?;
        let idx = pa * nb + pb;
        avg_ttf[idx] = (mean_ttf_a[pa] + c_ttf + mean_ttf_b[pb]) / norm;
        path[idx] = mean_hop_a[pa] + mean_hop_b[pb] + 1.0;
    }

    Ok(PairCostMatrix {
        ids_b: chip_b.qubits().iter().map(|q| q.id).collect(),
        avg_ttf,
        path,
        candidates: pairs,
        pos_a: chip_a.qubits().iter().enumerate().map(|(i, q)| (q.id, i)).collect(),
        pos_b: chip_b.qubits().iter().enumerate().map(|(i, q)| (q.id, i)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{generate_topology, ChipGraph, EdgeProperties, QubitProperties, TopologyKind, TopologyOpts};

    const TOL: f64 = 1e-9;

    fn line3_zero_error() -> ChipGraph {
        let opts = TopologyOpts {
            gate_time_ns: 100.0,
            gate_error: 0.0,
            ..TopologyOpts::default()
        };
        generate_topology(TopologyKind::Line, 3, &opts).unwrap()
    }

    #[test]
    fn edge_weight_zero_error_is_gate_time() {
        assert_eq!(ttf_edge_weight(100.0, 0.0, 1.0).unwrap(), 100.0);
    }

    #[test]
    fn edge_weight_matches_frozen_log_values() {
        // ln(1/0.965) = 0.035627177643151126 (independent high-precision calc)
        let w = ttf_edge_weight(235.0, 0.035, 1.0).unwrap();
        assert!((w - 235.035627177643151).abs() < TOL);
        // 2·ln 2
        let w = ttf_edge_weight(0.0, 0.5, 2.0).unwrap();
        assert!((w - 1.3862943611198906).abs() < TOL);
    }

    #[test]
    fn edge_weight_rejects_error_one() {
        assert!(ttf_edge_weight(10.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn all_pairs_on_zero_error_line() {
        let chip = line3_zero_error();
        let ttf = ttf_all_pairs(&chip, &TtfConfig::default()).unwrap();
        assert!((ttf[0][2] - 200.0).abs() < TOL);
        assert!((ttf[2][0] - 200.0).abs() < TOL);
        assert_eq!(ttf[1][1], 0.0);
    }

    #[test]
    fn all_pairs_takes_detour_around_heavy_edge() {
        // triangle with zero-error edge weights {50, 60, 200}:
        // TTF across the heavy edge = 110 via the detour
        let qubits = (0..3)
            .map(|id| QubitProperties {
                id,
                x: id as f64,
                y: 0.0,
                t1_ns: 1e5,
                t2_ns: 1e5,
                readout_error: 0.0,
            })
            .collect();
        let edges = vec![
            EdgeProperties { a: 0, b: 1, gate_time_ns: 50.0, gate_error: 0.0 },
            EdgeProperties { a: 1, b: 2, gate_time_ns: 60.0, gate_error: 0.0 },
            EdgeProperties { a: 0, b: 2, gate_time_ns: 200.0, gate_error: 0.0 },
        ];
        let chip = ChipGraph::new("tri", qubits, edges).unwrap();
        let ttf = ttf_all_pairs(&chip, &TtfConfig::default()).unwrap();
        assert!((ttf[0][2] - 110.0).abs() < TOL);
    }

    #[test]
    fn access_cost_on_line3() {
        let chip = line3_zero_error();
        let ttf = ttf_all_pairs(&chip, &TtfConfig::default()).unwrap();
        let mid = avg_access_cost(&chip, 1, &ttf).unwrap();
        assert!((mid - 200.0 / 3.0).abs() < TOL);
        let end = avg_access_cost(&chip, 0, &ttf).unwrap();
        assert!((end - 100.0).abs() < TOL);
    }

    #[test]
    fn access_cost_single_qubit_is_zero() {
        let chip = generate_topology(TopologyKind::Line, 1, &TopologyOpts::default()).unwrap();
        let ttf = ttf_all_pairs(&chip, &TtfConfig::default()).unwrap();
        assert_eq!(avg_access_cost(&chip, 0, &ttf).unwrap(), 0.0);
    }

    #[test]
    fn coupler_ttf_values() {
        let cfg = TtfConfig::default();
        let spec = CouplerSpec::default();
        let c = coupler_ttf(&spec, &cfg).unwrap();
        assert!((c - 235.035627177643151).abs() < TOL);
        let spec = CouplerSpec::new(10.0, 0.0).unwrap();
        assert_eq!(coupler_ttf(&spec, &cfg).unwrap(), 10.0);
    }

    #[test]
    fn cost_matrix_single_qubit_chips() {
        let opts = TopologyOpts::default();
        let a = generate_topology(TopologyKind::Line, 1, &opts).unwrap();
        let b = generate_topology(TopologyKind::Line, 1, &opts).unwrap();
        let m = build_cost_matrix(&a, &b, &CouplerSpec::default(), &TtfConfig::default(), None).unwrap();
        assert!((m.path(0, 0).unwrap() - 1.0).abs() < TOL);
        let c = coupler_ttf(&CouplerSpec::default(), &TtfConfig::default()).unwrap();
        assert!((m.avg_ttf(0, 0).unwrap() - c).abs() < TOL);
    }

    #[test]
    fn cost_matrix_two_line3_chips_center_pair() {
        let a = line3_zero_error();
        let b = line3_zero_error();
        let m = build_cost_matrix(&a, &b, &CouplerSpec::default(), &TtfConfig::default(), None).unwrap();
        assert!((m.path(1, 1).unwrap() - 7.0 / 3.0).abs() < TOL);
        let expected = 200.0 / 3.0 + 235.035627177643151 + 200.0 / 3.0;
        assert!((m.avg_ttf(1, 1).unwrap() - expected).abs() < TOL);
    }

    #[test]
    fn cost_matrix_respects_candidate_filter() {
        let a = line3_zero_error();
        let b = line3_zero_error();
        let m = build_cost_matrix(
            &a,
            &b,
            &CouplerSpec::default(),
            &TtfConfig::default(),
            Some(&[(2, 0)]),
        )
        .unwrap();
        assert_eq!(m.candidates(), &[(2, 0)]);
        assert!(m.avg_ttf(2, 0).is_some());
        assert!(m.avg_ttf(0, 0).is_none());
    }

    #[test]
    fn cost_matrix_rejects_empty_candidates() {
        let a = line3_zero_error();
        let b = line3_zero_error();
        assert!(build_cost_matrix(
            &a,
            &b,
            &CouplerSpec::default(),
            &TtfConfig::default(),
            Some(&[])
        )
        .is_err());
    }

    #[test]
    fn csv_export_has_all_candidates() {
        let a = line3_zero_error();
        let b = line3_zero_error();
        let m = build_cost_matrix(&a, &b, &CouplerSpec::default(), &TtfConfig::default(), None).unwrap();
        let csv = m.to_csv();
        assert_eq!(csv.lines().count(), 10); // header + 9 pairs
        assert!(csv.starts_with("u,v,path_hops,avg_ttf_ns\n"));
    }
}
