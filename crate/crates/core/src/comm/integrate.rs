use super::message::Message;
use super::schedule::GateMatrix;
use crate::error::{Error, Result};
use crate::nn::{gat_forward_gated, Activation, GatOutput, GatParams, Matrix};

pub const INTEGRATOR_ACTIVATION: Activation = Activation::Tanh;

pub fn message_matrix(messages: &[Message]) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = messages.iter().map(|m| m.sent().to_vec()).collect();
    Matrix::from_rows(&rows)
}

/// Attention-weighted combination of the messages each agent received.
///
/// Every agent attends to its own message (the self-loop) and to the senders
/// whose gate is open; closed gates contribute exactly nothing.
pub fn integrate(messages: &[Message], gates: &GateMatrix, gat: &GatParams) -> Result<GatOutput> {
    if let Some(&(s, d)) = gates
        .routes
        .iter()
        .find(|&&(s, d)| s >= messages.len() || d >= messages.len())
    {
        return Err(Error::invalid(format!("route {s}->{d} has no message")));
    }
    let h = message_matrix(messages)?;
    gat_forward_gated(&h, &gates.in_edges(messages.len()), gat, INTEGRATOR_ACTIVATION)
}
