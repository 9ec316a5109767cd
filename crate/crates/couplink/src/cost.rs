//! The five-term placement cost and hardware feasibility constraints.
//!
//! For a selected link set the total cost is
//! `α·path + β·effective + γ·congestion + δ·overload + ε·sparsity`.
//! The optimizer consumes the approximate congestion (max endpoint load);
//! the exact variant with the η cross-talk term is report-only.

use serde::{Deserialize, Serialize};

use crate::device::{hop_distances, ChipGraph};
use crate::error::{Error, Result};
use crate::ttf::PairCostMatrix;

/// Tunable term weights of the total cost, plus the cross-talk strength η
/// used only by the exact congestion report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub eta: f64,
}

impl Default for CostWeights {
    /// α=γ=δ=ε=1 with β=10; η=1.
    fn default() -> Self {
        CostWeights {
            alpha: 1.0,
            beta: 10.0,
            gamma: 1.0,
            delta: 1.0,
            epsilon: 1.0,
            eta: 1.0,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("epsilon", self.epsilon),
            ("eta", self.eta),
        ] {
            if !(w >= 0.0) {
                return Err(Error::validation(name, format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// The inter-chip couplers selected between one chip pair, in selection
/// order. `pairs[i] = (u on chip A, v on chip B)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSet {
    pub chip_a: String,
    pub chip_b: String,
    pub pairs: Vec<(u32, u32)>,
}

impl LinkSet {
    pub fn new(chip_a: &ChipGraph, chip_b: &ChipGraph, pairs: Vec<(u32, u32)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &pairs {
            if !chip_a.contains(u) {
                return Err(Error::validation("pairs", format!("qubit {u} not on chip {}", chip_a.name())));
            }
            if !chip_b.contains(v) {
                return Err(Error::validation("pairs", format!("qubit {v} not on chip {}", chip_b.name())));
            }
            if !seen.insert((u, v)) {
                return Err(Error::validation("pairs", format!("duplicate link ({u}, {v})")));
            }
        }
        Ok(LinkSet {
            chip_a: chip_a.name().to_string(),
            chip_b: chip_b.name().to_string(),
            pairs,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn load_a(&self, u: u32) -> usize {
        self.pairs.iter().filter(|&&(a, _)| a == u).count()
    }

    fn load_b(&self, v: u32) -> usize {
        self.pairs.iter().filter(|&&(_, b)| b == v).count()
    }
}

/// Hardware feasibility limits: per-qubit coupler cap, minimum physical
/// link separation, and total link budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub d_max: u32,
    pub delta_spacing_um: f64,
    pub n_max: u32,
}

impl Default for Constraints {
    fn default() -> Self {
        Constraints {
            d_max: 2,
            delta_spacing_um: 0.0,
            n_max: 16,
        }
    }
}

impl Constraints {
    pub fn validate(&self) -> Result<()> {
        if self.d_max < 1 {
            return Err(Error::validation("d_max", "d_max must be >= 1"));
        }
        if self.n_max < 1 {
            return Err(Error::validation("n_max", "n_max must be >= 1"));
        }
        if !(self.delta_spacing_um >= 0.0) {
            return Err(Error::validation("delta_spacing", "delta_spacing must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DegreeExceeded {
        chip: String,
        qubit: u32,
        couplers: u32,
        d_max: u32,
    },
    SpacingTooClose {
        link_i: (u32, u32),
        link_j: (u32, u32),
        distance_um: f64,
        delta_um: f64,
    },
    BudgetExceeded {
        links: u32,
        n_max: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// All five raw terms plus the weighted total, the report-only exact
/// congestion, and the feasibility verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub path: f64,
    pub effective: f64,
    pub congestion: f64,
    pub overload: f64,
    pub sparsity: f64,
    pub total: f64,
    pub congestion_exact: f64,
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Sum of mean-hop path values over selected links.
pub fn path_term(links: &LinkSet, matrix: &PairCostMatrix) -> Result<f64> {
    links
        .pairs
        .iter()
        .map(|&(u, v)| {
            matrix
                .path(u, v)
                .ok_or_else(|| Error::validation("pairs", format!("link ({u}, {v}) outside candidate set")))
        })
        .sum()
}

/// Sum of AvgTTF values over selected links.
pub fn effective_path_cost(links: &LinkSet, matrix: &PairCostMatrix) -> Result<f64> {
    links
        .pairs
        .iter()
        .map(|&(u, v)| {
            matrix
                .avg_ttf(u, v)
                .ok_or_else(|| Error::validation("pairs", format!("link ({u}, {v}) outside candidate set")))
        })
        .sum()
}

/// Approximate congestion: for each link, the larger of the two endpoint
/// loads, loads counted over the full link set.
pub fn congestion_approx(links: &LinkSet) -> f64 {
    links
        .pairs
        .iter()
        .map(|&(u, v)| links.load_a(u).max(links.load_b(v)) as f64)
        .sum()
}

/// Exact congestion report: value plus any link pairs whose chip-A
/// endpoints coincide (excluded from the 1/dist² sum).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongestionExact {
    pub value: f64,
    pub coincident: Vec<((u32, u32), (u32, u32))>,
}

/// Exact congestion: per-link degree penalty `load(u)+load(v)` plus the
/// η-weighted inverse-square physical proximity of chip-A endpoints.
pub fn congestion_exact(links: &LinkSet, chip_a: &ChipGraph, eta: f64) -> CongestionExact {
    let mut value = 0.0;
    let mut coincident = Vec::new();
    for (i, &(u, v)) in links.pairs.iter().enumerate() {
        let mut link_cost = (links.load_a(u) + links.load_b(v)) as f64;
        for (j, &(u2, v2)) in links.pairs.iter().enumerate() {
            if i == j {
                continue;
            }
            let dist = chip_a.phys_distance(u, u2).unwrap_or(f64::NAN);
            if dist > 0.0 {
                link_cost += eta / (dist * dist);
            } else if i < j {
                coincident.push(((u, v), (u2, v2)));
            }
        }
        value += link_cost;
    }
    CongestionExact { value, coincident }
}

/// Overload indicator sum: a link fires when either endpoint would exceed
/// `d_max` couplers counting itself.
pub fn overload_penalty(links: &LinkSet, d_max: u32) -> f64 {
    links
        .pairs
        .iter()
        .map(|&(u, v)| {
            // deg excluding this link, plus the link itself
            let deg_u = links.load_a(u) as u32; // includes self
            let deg_v = links.load_b(v) as u32;
            if deg_u > d_max || deg_v > d_max {
                1.0
            } else {
                0.0
            }
        })
        .sum()
}

/// Pairwise sparsity: `Σ 1/(1 + d_A(u,u') + d_B(v,v'))` over unordered
/// pairs of distinct links.
pub fn sparsity_penalty(
    links: &LinkSet,
    chip_a: &ChipGraph,
    hops_a: &[Vec<u32>],
    chip_b: &ChipGraph,
    hops_b: &[Vec<u32>],
) -> f64 {
    let mut total = 0.0;
    for i in 0..links.pairs.len() {
        for j in (i + 1)..links.pairs.len() {
            let (u1, v1) = links.pairs[i];
            let (u2, v2) = links.pairs[j];
            let da = hops_a[chip_a.position(u1).unwrap()][chip_a.position(u2).unwrap()];
            let db = hops_b[chip_b.position(v1).unwrap()][chip_b.position(v2).unwrap()];
            total += 1.0 / (1.0 + (da + db) as f64);
        }
    }
    total
}

/// Everything the cost terms and the optimizer need for one chip pair.
pub struct EvalContext<'a> {
    pub chip_a: &'a ChipGraph,
    pub chip_b: &'a ChipGraph,
    pub matrix: &'a PairCostMatrix,
    pub weights: CostWeights,
    pub constraints: Constraints,
    hops_a: Vec<Vec<u32>>,
    hops_b: Vec<Vec<u32>>,
}

impl<'a> EvalContext<'a> {
    pub fn new(
        chip_a: &'a ChipGraph,
        chip_b: &'a ChipGraph,
        matrix: &'a PairCostMatrix,
        weights: CostWeights,
        constraints: Constraints,
    ) -> Result<Self> {
        weights.validate()?;
        constraints.validate()?;
        Ok(EvalContext {
            chip_a,
            chip_b,
            matrix,
            weights,
            constraints,
            hops_a: hop_distances(chip_a),
            hops_b: hop_distances(chip_b),
        })
    }

    pub fn hops_a(&self) -> &[Vec<u32>] {
        &self.hops_a
    }

    pub fn hops_b(&self) -> &[Vec<u32>] {
        &self.hops_b
    }
}

/// Evaluates the full weighted cost of a link set.
pub fn total_cost(links: &LinkSet, ctx: &EvalContext<'_>) -> Result<CostBreakdown> {
    let path = path_term(links, ctx.matrix)?;
    let effective = effective_path_cost(links, ctx.matrix)?;
    let congestion = congestion_approx(links);
    let overload = overload_penalty(links, ctx.constraints.d_max);
    let sparsity = sparsity_penalty(links, ctx.chip_a, &ctx.hops_a, ctx.chip_b, &ctx.hops_b);
    let exact = congestion_exact(links, ctx.chip_a, ctx.weights.eta);
    let report = check_constraints(links, &ctx.constraints, ctx.chip_a, ctx.chip_b)?;
    let w = &ctx.weights;
    let total = w.alpha * path
        + w.beta * effective
        + w.gamma * congestion
        + w.delta * overload
        + w.epsilon * sparsity;
    Ok(CostBreakdown {
        path,
        effective,
        congestion,
        overload,
        sparsity,
        total,
        congestion_exact: exact.value,
        feasible: report.feasible(),
        violations: report.violations,
    })
}

/// Physical distance between two links: the smaller of the endpoint
/// distances on chip A and on chip B.
fn d_phys(
    link_i: (u32, u32),
    link_j: (u32, u32),
    chip_a: &ChipGraph,
    chip_b: &ChipGraph,
) -> Option<f64> {
    let da = chip_a.phys_distance(link_i.0, link_j.0)?;
    let db = chip_b.phys_distance(link_i.1, link_j.1)?;
    Some(da.min(db))
}

/// Checks the hard feasibility constraints; violations are data, not errors.
pub fn check_constraints(
    links: &LinkSet,
    constraints: &Constraints,
    chip_a: &ChipGraph,
    chip_b: &ChipGraph,
) -> Result<FeasibilityReport> {
    constraints.validate()?;
    let mut violations = Vec::new();

    let mut count_a: std::collections::BTreeMap<u32, u32> = std::collections::BTreeMap::new();
    let mut count_b: std::collections::BTreeMap<u32, u32> = std::collections::BTreeMap::new();
    for &(u, v) in &links.pairs {
        if !chip_a.contains(u) {
            return Err(Error::validation("pairs", format!("qubit {u} not on chip {}", chip_a.name())));
        }
        if !chip_b.contains(v) {
            return Err(Error::validation("pairs", format!("qubit {v} not on chip {}", chip_b.name())));
        }
        *count_a.entry(u).or_default() += 1;
        *count_b.entry(v).or_default() += 1;
    }
    for (&q, &c) in &count_a {
        if c > constraints.d_max {
            violations.push(Violation::DegreeExceeded {
                chip: chip_a.name().to_string(),
                qubit: q,
                couplers: c,
                d_max: constraints.d_max,
            });
        }
    }
    for (&q, &c) in &count_b {
        if c > constraints.d_max {
            violations.push(Violation::DegreeExceeded {
                chip: chip_b.name().to_string(),
                qubit: q,
                couplers: c,
                d_max: constraints.d_max,
            });
        }
    }
    for i in 0..links.pairs.len() {
        for j in (i + 1)..links.pairs.len() {
            let li = links.pairs[i];
            let lj = links.pairs[j];
            let dist = d_phys(li, lj, chip_a, chip_b).unwrap_or(f64::NAN);
            if !(dist > constraints.delta_spacing_um) {
                violations.push(Violation::SpacingTooClose {
                    link_i: li,
                    link_j: lj,
                    distance_um: dist,
                    delta_um: constraints.delta_spacing_um,
                });
            }
        }
    }
    if links.pairs.len() as u32 > constraints.n_max {
        violations.push(Violation::BudgetExceeded {
            links: links.pairs.len() as u32,
            n_max: constraints.n_max,
        });
    }
    Ok(FeasibilityReport { violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{generate_topology, CouplerSpec, TopologyKind, TopologyOpts};
    use crate::ttf::{build_cost_matrix, TtfConfig};

    const TOL: f64 = 1e-9;

    fn line(n: usize) -> ChipGraph {
        let opts = TopologyOpts {
            gate_time_ns: 100.0,
            gate_error: 0.0,
            ..TopologyOpts::default()
        };
        generate_topology(TopologyKind::Line, n, &opts).unwrap()
    }

    fn links(a: &ChipGraph, b: &ChipGraph, pairs: &[(u32, u32)]) -> LinkSet {
        LinkSet::new(a, b, pairs.to_vec()).unwrap()
    }

    #[test]
    fn congestion_worked_examples() {
        let a = line(4);
        let b = line(3);
        let clustered = links(&a, &b, &[(1, 0), (1, 1), (1, 2)]);
        assert!((congestion_approx(&clustered) - 9.0).abs() < TOL);
        let spread = links(&a, &b, &[(0, 0), (3, 1), (2, 2)]);
        assert!((congestion_approx(&spread) - 3.0).abs() < TOL);
        let empty = links(&a, &b, &[]);
        assert_eq!(congestion_approx(&empty), 0.0);
    }

    #[test]
    fn congestion_exact_single_link_is_two() {
        let a = line(4);
        let b = line(3);
        let single = links(&a, &b, &[(1, 0)]);
        let report = congestion_exact(&single, &a, 5.0);
        assert!((report.value - 2.0).abs() < TOL);
        assert!(report.coincident.is_empty());
    }

    #[test]
    fn congestion_exact_two_links_one_um_apart() {
        // pitch 1 μm: chip-A endpoints 0 and 1 are 1 μm apart, loads all 1
        let a = line(4);
        let b = line(3);
        let two = links(&a, &b, &[(0, 0), (1, 1)]);
        let report = congestion_exact(&two, &a, 1.0);
        assert!((report.value - 6.0).abs() < TOL);
    }

    #[test]
    fn congestion_exact_eta_zero_is_degree_sum() {
        let a = line(4);
        let b = line(3);
        let set = links(&a, &b, &[(1, 0), (1, 1), (0, 2)]);
        let report = congestion_exact(&set, &a, 0.0);
        let expected: f64 = set
            .pairs
            .iter()
            .map(|&(u, v)| (set.load_a(u) + set.load_b(v)) as f64)
            .sum();
        assert!((report.value - expected).abs() < TOL);
    }

    #[test]
    fn congestion_exact_flags_coincident_endpoints() {
        let a = line(4);
        let b = line(3);
        let set = links(&a, &b, &[(1, 0), (1, 1)]);
        let report = congestion_exact(&set, &a, 1.0);
        assert_eq!(report.coincident.len(), 1);
    }

    #[test]
    fn overload_worked_examples() {
        let a = line(4);
        let b = line(3);
        let clustered = links(&a, &b, &[(1, 0), (1, 1), (1, 2)]);
        assert!((overload_penalty(&clustered, 2) - 3.0).abs() < TOL);
        let spread = links(&a, &b, &[(0, 0), (3, 1), (2, 2)]);
        assert_eq!(overload_penalty(&spread, 2), 0.0);
        let single = links(&a, &b, &[(2, 1)]);
        assert_eq!(overload_penalty(&single, 1), 0.0);
    }

    #[test]
    fn sparsity_worked_examples() {
        // left: two line modules, clustered endpoints
        let a = line(5);
        let b = line(3);
        let hops_a = hop_distances(&a);
        let hops_b = hop_distances(&b);
        let clustered = links(&a, &b, &[(0, 0), (1, 1), (2, 2)]);
        let s = sparsity_penalty(&clustered, &a, &hops_a, &b, &hops_b);
        assert!((s - 13.0 / 15.0).abs() < TOL);

        // right: module A with d(0,3)=2, d(0,4)=3, d(3,4)=3
        let mut edges = Vec::new();
        for (x, y) in [(0u32, 1u32), (1, 3), (1, 2), (2, 4)] {
            edges.push(crate::device::EdgeProperties {
                a: x,
                b: y,
                gate_time_ns: 100.0,
                gate_error: 0.0,
            });
        }
        let qubits = (0..5)
            .map(|id| crate::device::QubitProperties {
                id,
                x: id as f64,
                y: 0.0,
                t1_ns: 1e5,
                t2_ns: 1e5,
                readout_error: 0.0,
            })
            .collect();
        let a2 = ChipGraph::new("modA", qubits, edges).unwrap();
        let hops_a2 = hop_distances(&a2);
        assert_eq!(hops_a2[0][3], 2);
        assert_eq!(hops_a2[0][4], 3);
        assert_eq!(hops_a2[3][4], 3);
        let spread = links(&a2, &b, &[(0, 0), (3, 1), (4, 2)]);
        let s = sparsity_penalty(&spread, &a2, &hops_a2, &b, &hops_b);
        assert!((s - 37.0 / 60.0).abs() < TOL);

        let single = links(&a, &b, &[(0, 0)]);
        assert_eq!(sparsity_penalty(&single, &a, &hops_a, &b, &hops_b), 0.0);
    }

    #[test]
    fn path_term_examples() {
        let a = line(3);
        let b = line(3);
        let m = build_cost_matrix(&a, &b, &CouplerSpec::default(), &TtfConfig::default(), None).unwrap();
        let empty = links(&a, &b, &[]);
        assert_eq!(path_term(&empty, &m).unwrap(), 0.0);
        let two = links(&a, &b, &[(1, 1), (0, 0)]);
        assert!((path_term(&two, &m).unwrap() - 16.0 / 3.0).abs() < TOL);
    }

    #[test]
    fn path_term_rejects_non_candidate() {
        let a = line(3);
        let b = line(3);
        let m = build_cost_matrix(
            &a,
            &b,
            &CouplerSpec::default(),
            &TtfConfig::default(),
            Some(&[(2, 0)]),
        )
        .unwrap();
        let set = links(&a, &b, &[(0, 0)]);
        assert!(path_term(&set, &m).is_err());
    }

    #[test]
    fn total_cost_empty_and_single_weight() {
        let a = line(3);
        let b = line(3);
        let m = build_cost_matrix(&a, &b, &CouplerSpec::default(), &TtfConfig::default(), None).unwrap();
        let ctx = EvalContext::new(&a, &b, &m, CostWeights::default(), Constraints::default()).unwrap();
        let empty = links(&a, &b, &[]);
        let bd = total_cost(&empty, &ctx).unwrap();
        assert_eq!(bd.total, 0.0);
        assert!(bd.feasible);

        let path_only = CostWeights {
            alpha: 1.0,
            beta: 0.0,
            gamma: 0.0,
            delta: 0.0,
            epsilon: 0.0,
            eta: 1.0,
        };
        let ctx = EvalContext::new(&a, &b, &m, path_only, Constraints::default()).unwrap();
        let set = links(&a, &b, &[(1, 1)]);
        let bd = total_cost(&set, &ctx).unwrap();
        assert!((bd.total - bd.path).abs() < TOL);
    }

    #[test]
    fn total_cost_congestion_only_reproduces_nine() {
        let a = line(4);
        let b = line(3);
        let m = build_cost_matrix(&a, &b, &CouplerSpec::default(), &TtfConfig::default(), None).unwrap();
        let w = CostWeights {
            alpha: 0.0,
            beta: 0.0,
            gamma: 1.0,
            delta: 0.0,
            epsilon: 0.0,
            eta: 1.0,
        };
        let ctx = EvalContext::new(&a, &b, &m, w, Constraints::default()).unwrap();
        let set = links(&a, &b, &[(1, 0), (1, 1), (1, 2)]);
        let bd = total_cost(&set, &ctx).unwrap();
        assert!((bd.total - 9.0).abs() < TOL);
    }

    #[test]
    fn constraint_violations_reported() {
        let a = line(4);
        let b = line(3);
        let set = links(&a, &b, &[(1, 0), (1, 1), (1, 2)]);
        let c = Constraints {
            d_max: 2,
            delta_spacing_um: 0.0,
            n_max: 16,
        };
        let report = check_constraints(&set, &c, &a, &b).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DegreeExceeded { qubit: 1, .. })));

        let c = Constraints {
            d_max: 4,
            delta_spacing_um: 0.0,
            n_max: 2,
        };
        let report = check_constraints(&set, &c, &a, &b).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::BudgetExceeded { links: 3, .. })));
    }

    #[test]
    fn spacing_zero_only_rejects_coincident_endpoints() {
        let a = line(4);
        let b = line(3);
        let c = Constraints::default();
        let spread = links(&a, &b, &[(0, 0), (3, 1)]);
        assert!(check_constraints(&spread, &c, &a, &b).unwrap().feasible());
        // shared chip-A endpoint -> d_phys = 0, not > 0
        let shared = links(&a, &b, &[(1, 0), (1, 2)]);
        let report = check_constraints(&shared, &c, &a, &b).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::SpacingTooClose { .. })));
    }
}
