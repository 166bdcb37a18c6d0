use rand::Rng;

use super::dense::Activation;
use super::matrix::Matrix;
use super::params::Params;
use crate::error::{Error, Result};

/// Graph convolution weights: `out = act(Â · H · Wᵀ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub w: Matrix,
}

impl GcnParams {
    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        Self {
            w: Matrix::init_uniform(output, input, rng),
        }
    }
}

impl Params for GcnParams {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&format!("{prefix}w"), self.w.as_slice());
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        f(self.w.as_mut_slice());
    }
}

fn check(h: &Matrix, a_hat: &Matrix, params: &GcnParams) -> Result<()> {
    if a_hat.rows() != h.rows() || a_hat.cols() != h.rows() {
        return Err(Error::shape(
            "gcn_forward adjacency",
            format!("{0}x{0}", h.rows()),
            format!("{}x{}", a_hat.rows(), a_hat.cols()),
        ));
    }
    if params.w.cols() != h.cols() {
        return Err(Error::shape("gcn_forward features", params.w.cols(), h.cols()));
    }
    Ok(())
}

pub fn gcn_forward(h: &Matrix, a_hat: &Matrix, params: &GcnParams, act: Activation) -> Result<Matrix> {
    check(h, a_hat, params)?;
    let mut out = a_hat.matmul(h)?.matmul(&params.w.transpose())?;
    out.as_mut_slice().iter_mut().for_each(|x| *x = act.apply(*x));
    Ok(out)
}

/// Returns `(∂L/∂H, ∂L/∂W)` given the forward output and `∂L/∂out`.
pub fn gcn_backward(
    h: &Matrix,
    a_hat: &Matrix,
    params: &GcnParams,
    act: Activation,
    out: &Matrix,
    grad_out: &Matrix,
) -> Result<(Matrix, GcnParams)> {
    check(h, a_hat, params)?;
    if grad_out.shape() != out.shape() {
        return Err(Error::shape(
            "gcn_backward",
            format!("{:?}", out.shape()),
            format!("{:?}", grad_out.shape()),
        ));
    }
    let mut delta = grad_out.clone();
    act.backprop(out.as_slice(), delta.as_mut_slice());
    let propagated = a_hat.matmul(h)?;
    let grad_w = delta.transpose().matmul(&propagated)?;
    let grad_propagated = delta.matmul(&params.w)?;
    let grad_h = a_hat.transpose().matmul(&grad_propagated)?;
    Ok((grad_h, GcnParams { w: grad_w }))
}
