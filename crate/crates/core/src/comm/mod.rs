//! The learned communication protocol: an attention scheduler deciding when and
//! with whom each agent talks, and a GAT integrator combining what it hears.

pub mod integrate;
pub mod message;
pub mod protocol;
pub mod schedule;
pub mod stats;

pub use integrate::integrate;
pub use message::{emit_messages, Message};
pub use protocol::{CommRound, GatePolicy, Protocol, ProtocolConfig};
pub use schedule::{schedule, sigmoid, CommMode, GateMatrix, Phase};
pub use stats::{comm_probability, GateStats};
