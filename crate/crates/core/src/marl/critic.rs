use rand::Rng;

use crate::error::Result;
use crate::nn::{Activation, Mlp, MlpTrace, Params};

/// Centralized critic `Q(joint observations, joint actions)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub net: Mlp,
}

impl Params for Critic {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.net.visit(prefix, f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.net.visit_mut(f);
    }
}

pub fn joint_input(obs: &[Vec<f64>], actions: &[Vec<f64>]) -> Vec<f64> {
    obs.iter().chain(actions).flatten().copied().collect()
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Self {
            net: Mlp::new(&sizes, Activation::Relu, Activation::Identity, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            net: self.net.zeros_like(),
        }
    }

    pub fn q(&self, input: &[f64]) -> Result<f64> {
        Ok(self.net.forward(input)?[0])
    }

    pub fn trace(&self, input: &[f64]) -> Result<MlpTrace> {
        self.net.forward_trace(input)
    }

    /// Accumulates `dq · ∂Q/∂θ` into `grads` and returns `dq · ∂Q/∂input`.
    pub fn backward(&self, trace: &MlpTrace, dq: f64, grads: &mut Critic) -> Result<Vec<f64>> {
        self.net.backward(trace, &[dq], &mut grads.net)
    }
}
