//! Cell-free massive-MIMO world simulation.

pub mod channel;
pub mod config;
pub mod world;

pub use channel::{compute_ee, compute_se, draw_channel, pathloss_db, ChannelRealization};
pub use config::{ScenarioConfig, Task};
pub use world::{power_row, DeviceKind, DeviceState, Position, StepOutcome, World};
