//! Link selection: greedy construction, simulated-annealing refinement,
//! and an exhaustive oracle for small instances.
//!
//! Greedy re-evaluates the full set cost for every candidate insertion
//! because congestion, overload, and sparsity are set-dependent. The
//! annealer explores the swap-one-link neighborhood under Metropolis
//! acceptance with geometric cooling and is deterministic given its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{check_constraints, total_cost, Constraints, CostBreakdown, CostWeights, EvalContext, LinkSet};
use crate::device::{ChipGraph, CouplerSpec};
use crate::error::{Error, Result};
use crate::ttf::{build_cost_matrix, TtfConfig};

pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub initial_temperature: f64,
    pub cooling_factor: f64,
    pub iterations: u32,
    pub seed: u64,
}

impl AnnealSchedule {
    /// Default schedule scaled from the greedy solution: T0 = 10% of the
    /// greedy cost, geometric cooling at 0.97, 300 iterations per link.
    pub fn default_for(greedy_cost: f64, k: usize, seed: u64) -> Self {
        AnnealSchedule {
            initial_temperature: (greedy_cost * 0.1).max(1e-9),
            cooling_factor: 0.97,
            iterations: (300 * k) as u32,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_temperature > 0.0) {
            return Err(Error::validation("initial_temperature", "must be > 0"));
        }
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return Err(Error::validation("cooling_factor", "must be in (0,1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "greedy")]
    Greedy,
    #[serde(rename = "greedy+anneal")]
    GreedyAnneal,
    #[serde(rename = "exhaustive")]
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub method: Method,
    pub links: LinkSet,
    pub breakdown: CostBreakdown,
    /// Accepted (iteration, cost) pairs; greedy records one entry per step.
    pub trace: Vec<(u32, f64)>,
    pub seed: u64,
}

impl SolveResult {
    /// Wire format: `{"method","links","cost","trace","seed"}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "method": self.method,
            "links": self.links.pairs,
            "cost": self.breakdown,
            "trace": self.trace,
            "seed": self.seed,
        })
    }
}

fn feasible_with(ctx: &EvalContext<'_>, pairs: &[(u32, u32)]) -> Result<bool> {
    let set = LinkSet::new(ctx.chip_a, ctx.chip_b, pairs.to_vec());
    let set = match set {
        Ok(s) => s,
        Err(_) => return Ok(false), // duplicate pair
    };
    Ok(check_constraints(&set, &ctx.constraints, ctx.chip_a, ctx.chip_b)?.feasible())
}

fn eval(ctx: &EvalContext<'_>, pairs: Vec<(u32, u32)>) -> Result<(LinkSet, CostBreakdown)> {
    let set = LinkSet::new(ctx.chip_a, ctx.chip_b, pairs)?;
    let bd = total_cost(&set, ctx)?;
    Ok((set, bd))
}

/// Greedy construction: k rounds, each adding the feasible candidate whose
/// inclusion minimizes the total cost of the augmented set. Ties break on
/// the lexicographically smallest (u, v).
pub fn greedy_select(ctx: &EvalContext<'_>, k: usize) -> Result<SolveResult> {
    if k as u32 > ctx.constraints.n_max {
        return Err(Error::Infeasible(format!(
            "k={k} exceeds link budget n_max={}",
            ctx.constraints.n_max
        )));
    }
    let mut selected: Vec<(u32, u32)> = Vec::with_capacity(k);
    let mut trace = Vec::with_capacity(k);
    let mut scratch = Vec::with_capacity(k);
    for step in 0..k {
        let mut best: Option<(f64, (u32, u32))> = None;
        for &cand in ctx.matrix.candidates() {
            if selected.contains(&cand) {
                continue;
            }
            scratch.clear();
            scratch.extend_from_slice(&selected);
            scratch.push(cand);
            if !feasible_with(ctx, &scratch)? {
                continue;
            }
            let (_, bd) = eval(ctx, scratch.clone())?;
            // candidates iterate in lex order, so strict < keeps the
            // lexicographically smallest tie
            if best.map_or(true, |(c, _)| bd.total < c) {
                best = Some((bd.total, cand));
            }
        }
        let (cost, cand) = best.ok_or_else(|| {
            Error::Infeasible(format!("no feasible candidate at greedy step {}", step + 1))
        })?;
        selected.push(cand);
        trace.push((step as u32, cost));
    }
    let (links, breakdown) = eval(ctx, selected)?;
    Ok(SolveResult {
        method: Method::Greedy,
        links,
        breakdown,
        trace,
        seed: 0,
    })
}

/// Metropolis refinement over the replace-one-link neighborhood. Infeasible
/// neighbors are rejected outright; the best feasible set visited is
/// returned. Deterministic given the schedule seed.
pub fn anneal_refine(
    ctx: &EvalContext<'_>,
    start: &LinkSet,
    schedule: &AnnealSchedule,
) -> Result<SolveResult> {
    schedule.validate()?;
    let start_bd = total_cost(start, ctx)?;
    if !start_bd.feasible {
        return Err(Error::Infeasible("anneal start violates constraints".into()));
    }
    let k = start.pairs.len();
    let candidates = ctx.matrix.candidates();
    let mut result = SolveResult {
        method: Method::GreedyAnneal,
        links: start.clone(),
        breakdown: start_bd.clone(),
        trace: Vec::new(),
        seed: schedule.seed,
    };
    if k == 0 || candidates.len() <= k {
        return Ok(result);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut current = start.pairs.clone();
    let mut current_cost = start_bd.total;
    let mut best_pairs = current.clone();
    let mut best_cost = current_cost;
    let mut temperature = schedule.initial_temperature;

    for iteration in 0..schedule.iterations {
        let slot = rng.gen_range(0..k);
        let replacement = loop {
            let cand = candidates[rng.gen_range(0..candidates.len())];
            if !current.contains(&cand) {
                break cand;
            }
        };
        let mut neighbor = current.clone();
        neighbor[slot] = replacement;
        if feasible_with(ctx, &neighbor)? {
            let (_, bd) = eval(ctx, neighbor.clone())?;
            let delta = bd.total - current_cost;
            let accept = delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp();
            if accept {
                current = neighbor;
                current_cost = bd.total;
                result.trace.push((iteration, current_cost));
                if current_cost < best_cost {
                    best_cost = current_cost;
                    best_pairs = current.clone();
                }
            }
        }
        temperature *= schedule.cooling_factor;
    }

    let (links, breakdown) = eval(ctx, best_pairs)?;
    result.links = links;
    result.breakdown = breakdown;
    Ok(result)
}

/// Greedy construction followed by annealing refinement with the default
/// schedule (unless one is supplied).
pub fn greedy_anneal(
    ctx: &EvalContext<'_>,
    k: usize,
    seed: u64,
    schedule: Option<AnnealSchedule>,
) -> Result<SolveResult> {
    let greedy = greedy_select(ctx, k)?;
    let schedule = schedule.unwrap_or_else(|| AnnealSchedule::default_for(greedy.breakdown.total, k, seed));
    anneal_refine(ctx, &greedy.links, &schedule)
}

fn binomial_capped(n: u128, k: u128, cap: u128) -> u128 {
    let mut result: u128 = 1;
    for i in 0..k {
        result = result.saturating_mul(n - i) / (i + 1);
        if result > cap {
            return result;
        }
    }
    result
}

/// Exhaustive oracle: enumerates every feasible k-subset of the candidate
/// set and returns the minimum-cost one (lexicographic tie-break).
pub fn exhaustive_select(ctx: &EvalContext<'_>, k: usize, cap: Option<u64>) -> Result<SolveResult> {
    let cap = cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
    let m = ctx.matrix.candidates().len();
    let subsets = binomial_capped(m as u128, k as u128, cap as u128);
    if subsets > cap as u128 {
        return Err(Error::EnumerationCap { subsets, cap });
    }
    use itertools::Itertools;
    let mut best: Option<(f64, Vec<(u32, u32)>)> = None;
    for combo in (0..m).combinations(k) {
        let pairs: Vec<(u32, u32)> = combo.iter().map(|&i| ctx.matrix.candidates()[i]).collect();
        if !feasible_with(ctx, &pairs)? {
            continue;
        }
        let (_, bd) = eval(ctx, pairs.clone())?;
        // lex-ordered enumeration: strict < keeps the first minimum
        if best.as_ref().map_or(true, |(c, _)| bd.total < *c) {
            best = Some((bd.total, pairs));
        }
    }
    let (_, pairs) = best.ok_or_else(|| Error::Infeasible(format!("no feasible {k}-subset exists")))?;
    let (links, breakdown) = eval(ctx, pairs)?;
    Ok(SolveResult {
        method: Method::Exhaustive,
        links,
        breakdown,
        trace: Vec::new(),
        seed: 0,
    })
}

/// Uniformly samples feasible k-link sets by randomized greedy insertion.
pub fn sample_random_feasible(
    ctx: &EvalContext<'_>,
    k: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<LinkSet>> {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    let mut order: Vec<usize> = (0..ctx.matrix.candidates().len()).collect();
    for _ in 0..count {
        let mut found = None;
        for _attempt in 0..200 {
            order.shuffle(&mut rng);
            let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(k);
            for &idx in &order {
                if pairs.len() == k {
                    break;
                }
                let cand = ctx.matrix.candidates()[idx];
                pairs.push(cand);
                if !feasible_with(ctx, &pairs)? {
                    pairs.pop();
                }
            }
            if pairs.len() == k {
                found = Some(LinkSet::new(ctx.chip_a, ctx.chip_b, pairs)?);
                break;
            }
        }
        samples.push(found.ok_or_else(|| {
            Error::Infeasible(format!("could not sample a feasible {k}-link set"))
        })?);
    }
    Ok(samples)
}

/// Solves each adjacent chip pair of a chain independently.
///
/// `specs[i]` and `budgets[i]` apply to the pair `(chips[i], chips[i+1])`.
pub fn optimize_multichip(
    chips: &[ChipGraph],
    specs: &[CouplerSpec],
    budgets: &[usize],
    weights: CostWeights,
    constraints: Constraints,
    ttf: &TtfConfig,
    seed: u64,
    schedule: Option<AnnealSchedule>,
) -> Result<Vec<SolveResult>> {
    if chips.len() < 2 {
        return Err(Error::validation("chips", "multichip system needs >= 2 chips"));
    }
    if specs.len() != chips.len() - 1 || budgets.len() != chips.len() - 1 {
        return Err(Error::validation(
            "budgets",
            "need one coupler spec and one budget per adjacent chip pair",
        ));
    }
    let mut results = Vec::with_capacity(chips.len() - 1);
    for i in 0..chips.len() - 1 {
        let matrix = build_cost_matrix(&chips[i], &chips[i + 1], &specs[i], ttf, None)?;
        let ctx = EvalContext::new(&chips[i], &chips[i + 1], &matrix, weights, constraints)?;
        let pair_seed = seed.wrapping_add(i as u64);
        let pair_schedule = schedule.map(|mut s| {
            s.seed = pair_seed;
            s
        });
        results.push(greedy_anneal(&ctx, budgets[i], pair_seed, pair_schedule)?);
    }
    Ok(results)
}
