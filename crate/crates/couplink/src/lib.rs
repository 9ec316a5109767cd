//! Fidelity-aware inter-chip coupler placement for modular and chiplet
//! quantum systems.
//!
//! The pipeline has three phases:
//!
//! 1. **Cost matrix construction** ([`ttf`]): fold gate latency and error
//!    into Time-to-Fidelity edge weights and precompute per-pair access,
//!    egress, and coupler costs for every candidate link.
//! 2. **Link selection** ([`optimize`]): pick `k` couplers minimizing a
//!    five-term weighted cost (path length, effective path cost,
//!    congestion, overload, sparsity — [`cost`]) under hard degree,
//!    spacing, and budget constraints, via greedy construction with
//!    simulated-annealing refinement; an exhaustive oracle covers small
//!    instances.
//! 3. **Validation** ([`route`]): route random circuits on the merged
//!    multi-chip graph with SWAP insertion and report on-chip SWAPs,
//!    inter-chip operations, depth, and estimated fidelity.
//!
//! Device graphs and the six canonical topology generators live in
//! [`device`]; run parameters in [`config`].

pub mod config;
pub mod cost;
pub mod device;
pub mod error;
pub mod optimize;
pub mod route;
pub mod ttf;

pub use error::{Error, Result};
