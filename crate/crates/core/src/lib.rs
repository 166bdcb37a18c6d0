//! Graph-attention scheduled communication for multi-agent deep deterministic
//! policy gradient learning, with a cell-free massive-MIMO simulator to train in.
//!
//! Module map:
//! - [`env`]: device placement, mobility, three-slope channels, SE/EE and task rewards.
//! - [`graph`]: typed communication graphs (bipartite, heterogeneous, hierarchical)
//!   and neighbor sampling.
//! - [`nn`]: small dense/GCN/GraphSAGE/GAT kernels with analytic backward passes,
//!   Adam, finite-difference checking and checkpoints.
//! - [`comm`]: the attention scheduler (when and with whom to talk) and the
//!   gated GAT integrator.
//! - [`marl`]: actors, centralized critics, replay, training and rollouts.
//! - [`harness`]: config files, experiment orchestration and CSV outputs.

pub mod comm;
pub mod env;
pub mod error;
pub mod graph;
pub mod harness;
pub mod marl;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
