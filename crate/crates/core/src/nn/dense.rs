use rand::Rng;

use super::matrix::Matrix;
use super::params::Params;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    /// `grad ⊙ act'(y)` in place.
    pub fn backprop(self, y: &[f64], grad: &mut [f64]) {
        if self == Activation::Identity {
            return;
        }
        for (g, &yi) in grad.iter_mut().zip(y) {
            *g *= self.derivative_from_output(yi);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl DenseParams {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            w: Matrix::zeros(output, input),
            b: vec![0.0; output],
        }
    }

    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let w = Matrix::init_uniform(output, input, rng);
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        let b = (0..output)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        Self { w, b }
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }
}

impl Params for DenseParams {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&format!("{prefix}w"), self.w.as_slice());
        f(&format!("{prefix}b"), &self.b);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        f(self.w.as_mut_slice());
        f(&mut self.b);
    }
}

/// One fully connected layer `y = act(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub params: DenseParams,
    pub act: Activation,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(input: usize, output: usize, act: Activation, rng: &mut R) -> Self {
        Self {
            params: DenseParams::init(input, output, rng),
            act,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.params.input_dim() {
            return Err(Error::shape("dense_forward", self.params.input_dim(), x.len()));
        }
        let mut y = self.params.w.matvec(x);
        for (yi, bi) in y.iter_mut().zip(&self.params.b) {
            *yi = self.act.apply(*yi + bi);
        }
        Ok(y)
    }

    /// Backward pass given the forward input `x` and output `y`.
    ///
    /// Accumulates parameter gradients into `grads` and returns `∂L/∂x`.
    pub fn backward(
        &self,
        x: &[f64],
        y: &[f64],
        grad_y: &[f64],
        grads: &mut DenseParams,
    ) -> Result<Vec<f64>> {
        if grad_y.len() != self.params.output_dim() || y.len() != grad_y.len() {
            return Err(Error::shape(
                "dense_backward",
                self.params.output_dim(),
                grad_y.len(),
            ));
        }
        if x.len() != self.params.input_dim() {
            return Err(Error::shape("dense_backward", self.params.input_dim(), x.len()));
        }
        let mut delta = grad_y.to_vec();
        self.act.backprop(y, &mut delta);
        grads.w.add_outer(1.0, &delta, x);
        for (gb, d) in grads.b.iter_mut().zip(&delta) {
            *gb += d;
        }
        Ok(self.params.w.matvec_t(&delta))
    }
}

impl Params for Dense {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.params.visit(prefix, f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.params.visit_mut(f);
    }
}

/// A stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations recorded by [`Mlp::forward_trace`]: the input followed by every
/// layer output.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    pub activations: Vec<Vec<f64>>,
}

impl MlpTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace holds the input at least")
    }
}

impl Mlp {
    /// `sizes = [in, h1, ..., out]`; hidden layers use `hidden`, the last uses `output`.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { output } else { hidden };
                Dense::new(sizes[i], sizes[i + 1], act, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].params.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.params.output_dim())
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.zero();
        z
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.forward(&h)?;
        }
        Ok(h)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<MlpTrace> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        for layer in &self.layers {
            let next = layer.forward(activations.last().unwrap())?;
            activations.push(next);
        }
        Ok(MlpTrace { activations })
    }

    /// Returns `∂L/∂x`; parameter gradients accumulate into `grads`.
    pub fn backward(&self, trace: &MlpTrace, grad_out: &[f64], grads: &mut Mlp) -> Result<Vec<f64>> {
        let mut g = grad_out.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            g = layer.backward(
                &trace.activations[i],
                &trace.activations[i + 1],
                &g,
                &mut grads.layers[i].params,
            )?;
        }
        Ok(g)
    }
}

impl Params for Mlp {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        for (i, l) in self.layers.iter().enumerate() {
            l.visit(&format!("{prefix}{i}."), f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        for l in &mut self.layers {
            l.visit_mut(f);
        }
    }
}
