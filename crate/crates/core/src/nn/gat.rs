//! Single-head graph attention.
//!
//! `z_j = W h_j`, `e_ij = LeakyReLU(a_srcᵀ z_i + a_dstᵀ z_j)` with `a = [a_src ‖ a_dst]`,
//! `α_ij = softmax_j(e_ij)` over `N(i) ∪ {i}`, `out_i = act(Σ_j α_ij z_j)`.
//!
//! The gated variant multiplies each neighbor's unnormalized weight by a gate
//! `g_ij ∈ [0, 1]` (the self-loop is always 1), so `g_ij = 0` removes the edge
//! exactly and `g_ij = 1` keeps it. Gradients with respect to the gates are
//! returned so that a straight-through estimator can route them further.

use rand::Rng;

use super::dense::Activation;
use super::matrix::{axpy, dot, Matrix};
use super::params::Params;
use crate::error::{Error, Result};

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct GatParams {
    pub w: Matrix,
    /// Length `2 F'`: the first half scores the receiving node, the second the sender.
    pub a: Vec<f64>,
    pub leaky_slope: f64,
}

impl GatParams {
    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (output as f64).sqrt();
        Self {
            w: Matrix::init_uniform(output, input, rng),
            a: (0..2 * output)
                .map(|_| rng.random_range(-bound..=bound))
                .collect(),
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w: Matrix::zeros(self.w.rows(), self.w.cols()),
            a: vec![0.0; self.a.len()],
            leaky_slope: self.leaky_slope,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }

    fn a_dst(&self) -> &[f64] {
        &self.a[..self.w.rows()]
    }

    fn a_src(&self) -> &[f64] {
        &self.a[self.w.rows()..]
    }
}

impl Params for GatParams {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&format!("{prefix}w"), self.w.as_slice());
        f(&format!("{prefix}a"), &self.a);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        f(self.w.as_mut_slice());
        f(&mut self.a);
    }
}

/// Structural in-neighbor lists: `neighbors[i]` are the nodes `i` attends to.
///
/// Edge weights are never carried; any nonzero entry of a dense matrix is an edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    pub neighbors: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        Self {
            neighbors: vec![Vec::new(); n],
        }
    }

    /// `m[(i, j)] != 0` means `i` receives from `j`.
    pub fn from_dense(m: &Matrix) -> Self {
        let neighbors = (0..m.rows())
            .map(|i| (0..m.cols()).filter(|&j| m[(i, j)] != 0.0).collect())
            .collect();
        Self { neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Attention bookkeeping for one receiving node.
#[derive(Debug, Clone)]
pub struct AttentionRow {
    /// Candidate senders; index 0 is the node itself.
    pub nodes: Vec<usize>,
    pub gates: Vec<f64>,
    /// Pre-activation scores `aᵀ[z_i ‖ z_j]`.
    pub scores: Vec<f64>,
    /// `exp(e_ij − max)` before gating.
    pub expd: Vec<f64>,
    pub norm: f64,
    /// Normalized attention `α_ij` (zero for closed gates).
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GatOutput {
    pub out: Matrix,
    /// Dense `V×V` attention matrix.
    pub alpha: Matrix,
    pub z: Matrix,
    pub pre: Matrix,
    pub rows: Vec<AttentionRow>,
}

#[derive(Debug, Clone)]
pub struct GatGrads {
    pub h: Matrix,
    pub params: GatParams,
    /// `∂L/∂g` aligned with each row's candidate list (entry 0 is the self-loop).
    pub gates: Vec<Vec<f64>>,
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

/// GAT over a structural adjacency (self-loops added internally).
pub fn gat_forward(h: &Matrix, adj: &Adjacency, params: &GatParams, act: Activation) -> Result<GatOutput> {
    let gated: Vec<Vec<(usize, f64)>> = adj
        .neighbors
        .iter()
        .map(|ns| ns.iter().map(|&j| (j, 1.0)).collect())
        .collect();
    gat_forward_gated(h, &gated, params, act)
}

/// GAT where each in-edge `(j, g_ij)` carries a gate multiplying its weight.
pub fn gat_forward_gated(
    h: &Matrix,
    in_edges: &[Vec<(usize, f64)>],
    params: &GatParams,
    act: Activation,
) -> Result<GatOutput> {
    let (v, f) = h.shape();
    if in_edges.len() != v {
        return Err(Error::shape("gat_forward adjacency", v, in_edges.len()));
    }
    if params.w.cols() != f {
        return Err(Error::shape("gat_forward features", params.w.cols(), f));
    }
    if params.a.len() != 2 * params.w.rows() {
        return Err(Error::shape("gat_forward attention vector", 2 * params.w.rows(), params.a.len()));
    }
    let fo = params.w.rows();
    let mut z = Matrix::zeros(v, fo);
    for j in 0..v {
        let zj = params.w.matvec(h.row(j));
        z.row_mut(j).copy_from_slice(&zj);
    }
    let dst_score: Vec<f64> = (0..v).map(|i| dot(params.a_dst(), z.row(i))).collect();
    let src_score: Vec<f64> = (0..v).map(|j| dot(params.a_src(), z.row(j))).collect();

    let mut rows = Vec::with_capacity(v);
    let mut pre = Matrix::zeros(v, fo);
    let mut alpha_dense = Matrix::zeros(v, v);
    for (i, edges) in in_edges.iter().enumerate() {
        let mut nodes = vec![i];
        let mut gates = vec![1.0];
        for &(j, g) in edges {
            if j >= v {
                return Err(Error::invalid(format!("edge source {j} out of range for {v} nodes")));
            }
            if j == i || nodes.contains(&j) {
                continue;
            }
            nodes.push(j);
            gates.push(g);
        }
        let scores: Vec<f64> = nodes.iter().map(|&j| dst_score[i] + src_score[j]).collect();
        let e: Vec<f64> = scores.iter().map(|&s| leaky(s, params.leaky_slope)).collect();
        let max = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expd: Vec<f64> = e.iter().map(|x| (x - max).exp()).collect();
        let norm: f64 = expd.iter().zip(&gates).map(|(x, g)| x * g).sum();
        let alpha: Vec<f64> = expd.iter().zip(&gates).map(|(x, g)| g * x / norm).collect();
        for (k, &j) in nodes.iter().enumerate() {
            alpha_dense[(i, j)] = alpha[k];
            axpy(alpha[k], z.row(j), pre.row_mut(i));
        }
        rows.push(AttentionRow {
            nodes,
            gates,
            scores,
            expd,
            norm,
            alpha,
        });
    }
    let mut out = pre.clone();
    out.as_mut_slice().iter_mut().for_each(|x| *x = act.apply(*x));
    Ok(GatOutput {
        out,
        alpha: alpha_dense,
        z,
        pre,
        rows,
    })
}

pub fn gat_backward(
    h: &Matrix,
    params: &GatParams,
    act: Activation,
    fwd: &GatOutput,
    grad_out: &Matrix,
) -> Result<GatGrads> {
    if grad_out.shape() != fwd.out.shape() {
        return Err(Error::shape(
            "gat_backward",
            format!("{:?}", fwd.out.shape()),
            format!("{:?}", grad_out.shape()),
        ));
    }
    let (v, f) = h.shape();
    let fo = params.w.rows();
    let mut grads = params.zeros_like();
    let mut dz = Matrix::zeros(v, fo);
    let mut dgates = Vec::with_capacity(v);

    for (i, row) in fwd.rows.iter().enumerate() {
        let mut delta = grad_out.row(i).to_vec();
        act.backprop(fwd.out.row(i), &mut delta);
        let delta_pre = dot(&delta, fwd.pre.row(i));
        let mut dg_row = vec![0.0; row.nodes.len()];
        for (k, &j) in row.nodes.iter().enumerate() {
            let zj = fwd.z.row(j);
            // value path
            axpy(row.alpha[k], &delta, dz.row_mut(j));
            let diff = dot(&delta, zj) - delta_pre;
            dg_row[k] = row.expd[k] / row.norm * diff;
            let de = row.alpha[k] * diff;
            if de == 0.0 {
                continue;
            }
            let ds = if row.scores[k] > 0.0 {
                de
            } else {
                de * params.leaky_slope
            };
            // score path: s = a_dstᵀ z_i + a_srcᵀ z_j
            let (ga_dst, ga_src) = grads.a.split_at_mut(fo);
            axpy(ds, fwd.z.row(i), ga_dst);
            axpy(ds, zj, ga_src);
            axpy(ds, params.a_dst(), dz.row_mut(i));
            axpy(ds, params.a_src(), dz.row_mut(j));
        }
        dgates.push(dg_row);
    }

    let mut grad_h = Matrix::zeros(v, f);
    for j in 0..v {
        grads.w.add_outer(1.0, dz.row(j), h.row(j));
        let gh = params.w.matvec_t(dz.row(j));
        grad_h.row_mut(j).copy_from_slice(&gh);
    }
    Ok(GatGrads {
        h: grad_h,
        params: grads,
        gates: dgates,
    })
}
