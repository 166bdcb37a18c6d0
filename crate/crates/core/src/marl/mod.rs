//! Multi-agent deep deterministic policy gradient with learned communication.

pub mod actor;
pub mod buffer;
pub mod critic;
pub mod env;
pub mod maddpg;
pub mod toy;

pub use actor::{Actor, ActorConfig, ActorRound};
pub use buffer::{ReplayBuffer, Transition};
pub use critic::{joint_input, Critic};
pub use env::{CellFreeEnv, EnvStep, MultiAgentEnv};
pub use maddpg::{EpisodeRecord, LossReport, Maddpg, RolloutOptions, TrainConfig};
pub use toy::{toy_meet_env, ToyMeetEnv, NO_INFORMATION_COST};
