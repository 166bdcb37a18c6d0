use rand::Rng;

use super::dense::Activation;
use super::matrix::{axpy, Matrix};
use super::params::Params;
use crate::error::{Error, Result};

/// GraphSAGE mean-aggregator weights:
/// `out_i = act(W_self · h_i + W_neigh · mean_{j ∈ S_i} h_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SageParams {
    pub w_self: Matrix,
    pub w_neigh: Matrix,
}

impl SageParams {
    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        Self {
            w_self: Matrix::init_uniform(output, input, rng),
            w_neigh: Matrix::init_uniform(output, input, rng),
        }
    }
}

impl Params for SageParams {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&format!("{prefix}w_self"), self.w_self.as_slice());
        f(&format!("{prefix}w_neigh"), self.w_neigh.as_slice());
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        f(self.w_self.as_mut_slice());
        f(self.w_neigh.as_mut_slice());
    }
}

#[derive(Debug, Clone)]
pub struct SageOutput {
    pub out: Matrix,
    /// Neighbor mean per node (zero when the sampled set is empty).
    pub means: Matrix,
    /// Neighbor feature rows read while aggregating each node.
    pub touches: Vec<usize>,
}

pub fn sage_forward(
    h: &Matrix,
    sampled: &[Vec<usize>],
    params: &SageParams,
    act: Activation,
) -> Result<SageOutput> {
    let (v, f) = h.shape();
    if sampled.len() != v {
        return Err(Error::shape("sage_forward neighbor sets", v, sampled.len()));
    }
    if params.w_self.cols() != f || params.w_neigh.cols() != f {
        return Err(Error::shape("sage_forward features", params.w_self.cols(), f));
    }
    let mut means = Matrix::zeros(v, f);
    let mut touches = vec![0; v];
    for (i, set) in sampled.iter().enumerate() {
        if set.is_empty() {
            continue;
        }
        let inv = 1.0 / set.len() as f64;
        for &j in set {
            if j >= v {
                return Err(Error::invalid(format!("neighbor {j} out of range for {v} nodes")));
            }
            axpy(inv, h.row(j), means.row_mut(i));
            touches[i] += 1;
        }
    }
    let mut out = Matrix::zeros(v, params.w_self.rows());
    for i in 0..v {
        let a = params.w_self.matvec(h.row(i));
        let b = params.w_neigh.matvec(means.row(i));
        for ((o, x), y) in out.row_mut(i).iter_mut().zip(a).zip(b) {
            *o = act.apply(x + y);
        }
    }
    Ok(SageOutput { out, means, touches })
}

pub fn sage_backward(
    h: &Matrix,
    sampled: &[Vec<usize>],
    params: &SageParams,
    act: Activation,
    fwd: &SageOutput,
    grad_out: &Matrix,
) -> Result<(Matrix, SageParams)> {
    if grad_out.shape() != fwd.out.shape() {
        return Err(Error::shape(
            "sage_backward",
            format!("{:?}", fwd.out.shape()),
            format!("{:?}", grad_out.shape()),
        ));
    }
    let (v, f) = h.shape();
    let mut grads = SageParams {
        w_self: Matrix::zeros(params.w_self.rows(), f),
        w_neigh: Matrix::zeros(params.w_neigh.rows(), f),
    };
    let mut grad_h = Matrix::zeros(v, f);
    for i in 0..v {
        let mut delta = grad_out.row(i).to_vec();
        act.backprop(fwd.out.row(i), &mut delta);
        grads.w_self.add_outer(1.0, &delta, h.row(i));
        grads.w_neigh.add_outer(1.0, &delta, fwd.means.row(i));
        let gs = params.w_self.matvec_t(&delta);
        axpy(1.0, &gs, grad_h.row_mut(i));
        if !sampled[i].is_empty() {
            let gm = params.w_neigh.matvec_t(&delta);
            let inv = 1.0 / sampled[i].len() as f64;
            for &j in &sampled[i] {
                axpy(inv, &gm, grad_h.row_mut(j));
            }
        }
    }
    Ok((grad_h, grads))
}
