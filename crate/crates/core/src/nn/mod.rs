//! Small neural-network kernels with analytic backward passes.

pub mod adam;
pub mod checkpoint;
pub mod dense;
pub mod gat;
pub mod gcn;
pub mod gradcheck;
pub mod matrix;
pub mod params;
pub mod sage;

pub use adam::{adam_step, AdamState};
pub use checkpoint::Checkpoint;
pub use dense::{Activation, Dense, DenseParams, Mlp, MlpTrace};
pub use gat::{gat_backward, gat_forward, gat_forward_gated, Adjacency, GatOutput, GatParams};
pub use gcn::{gcn_backward, gcn_forward, GcnParams};
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use matrix::Matrix;
pub use params::{param_distance, soft_update, Params};
pub use sage::{sage_backward, sage_forward, SageOutput, SageParams};
