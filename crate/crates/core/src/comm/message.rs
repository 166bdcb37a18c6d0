use crate::nn::DenseParams;

/// A message emitted by one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    /// Output of the message head.
    pub payload: Vec<f64>,
    /// `sign(payload)` with `sign(0) = +1`, present when binarization is on.
    pub binarized: Option<Vec<f64>>,
}

impl Message {
    /// What actually goes on the air.
    pub fn sent(&self) -> &[f64] {
        self.binarized.as_deref().unwrap_or(&self.payload)
    }
}

pub fn binarize(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect()
}

/// Apply the (linear) message head to every embedding.
///
/// Binarized payloads are differentiated straight-through: the backward pass
/// treats `sign` as the identity.
pub fn emit_messages(embeddings: &[Vec<f64>], head: &DenseParams, binarize_payload: bool) -> Vec<Message> {
    embeddings
        .iter()
        .map(|e| {
            let mut payload = head.w.matvec(e);
            for (p, b) in payload.iter_mut().zip(&head.b) {
                *p += b;
            }
            let binarized = binarize_payload.then(|| binarize(&payload));
            Message { payload, binarized }
        })
        .collect()
}
