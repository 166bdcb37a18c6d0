use crate::error::{Error, Result};

/// Gate summary of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GateStats {
    pub sum_p: f64,
    pub sum_g: f64,
    pub routes: usize,
}

impl GateStats {
    pub fn mean_p(&self) -> f64 {
        if self.routes == 0 {
            0.0
        } else {
            self.sum_p / self.routes as f64
        }
    }

    pub fn mean_g(&self) -> f64 {
        if self.routes == 0 {
            0.0
        } else {
            self.sum_g / self.routes as f64
        }
    }
}

impl From<&super::GateMatrix> for GateStats {
    fn from(g: &super::GateMatrix) -> Self {
        Self {
            sum_p: g.sum_p(),
            sum_g: g.g.iter().sum(),
            routes: g.len(),
        }
    }
}

/// Mean communication probability over every (step, eligible route) pair.
///
/// Averaging per route puts networks with different route counts on the same
/// [0, 1] scale. Steps without routes contribute nothing; if no step had a
/// route the probability is 0.
pub fn comm_probability(history: &[GateStats]) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::invalid("communication probability of an empty history"));
    }
    let routes: usize = history.iter().map(|s| s.routes).sum();
    if routes == 0 {
        return Ok(0.0);
    }
    Ok(history.iter().map(|s| s.sum_p).sum::<f64>() / routes as f64)
}
