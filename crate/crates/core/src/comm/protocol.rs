//! One full communication round: encode → schedule → emit → integrate, with its
//! backward pass.

use rand::Rng;

use super::integrate::{integrate, message_matrix, INTEGRATOR_ACTIVATION};
use super::message::{emit_messages, Message};
use super::schedule::{schedule, CommMode, GateMatrix, Phase};
use crate::error::{Error, Result};
use crate::nn::{gat_backward, Activation, DenseParams, GatOutput, GatParams, Matrix, Mlp, MlpTrace, Params};

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub obs_dim: usize,
    /// Number of parameter-sharing groups (one observation encoder each).
    pub groups: usize,
    pub encoder_hidden: Vec<usize>,
    /// Embedding width `d_e`.
    pub embed_dim: usize,
    /// Query/key width `d_a`.
    pub attn_dim: usize,
    /// Message width `d_msg`.
    pub msg_dim: usize,
    /// Integrator output width.
    pub integrate_dim: usize,
    pub binarize: bool,
}

impl ProtocolConfig {
    pub fn new(obs_dim: usize, groups: usize) -> Self {
        Self {
            obs_dim,
            groups,
            encoder_hidden: vec![64],
            embed_dim: 32,
            attn_dim: 16,
            msg_dim: 8,
            integrate_dim: 16,
            binarize: false,
        }
    }
}

/// How gates are produced for a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GatePolicy {
    pub mode: CommMode,
    pub phase: Phase,
    /// Keep at most this many open incoming gates per receiver.
    pub cap: Option<usize>,
}

impl GatePolicy {
    pub fn new(mode: CommMode, phase: Phase) -> Self {
        Self {
            mode,
            phase,
            cap: None,
        }
    }
}

/// Scheduler and integrator parameters: per-group observation encoders, the
/// shared query/key projections, message head and GAT integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub encoders: Vec<Mlp>,
    pub query: Matrix,
    pub key: Matrix,
    pub message: DenseParams,
    pub integrator: GatParams,
    pub binarize: bool,
}

impl Params for Protocol {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        for (g, e) in self.encoders.iter().enumerate() {
            e.visit(&format!("{prefix}encoder.{g}."), f);
        }
        f(&format!("{prefix}query"), self.query.as_slice());
        f(&format!("{prefix}key"), self.key.as_slice());
        self.message.visit(&format!("{prefix}message."), f);
        self.integrator.visit(&format!("{prefix}integrator."), f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        for e in &mut self.encoders {
            e.visit_mut(f);
        }
        f(self.query.as_mut_slice());
        f(self.key.as_mut_slice());
        self.message.visit_mut(f);
        self.integrator.visit_mut(f);
    }
}

/// Everything a round computed, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct CommRound {
    pub encoder_traces: Vec<MlpTrace>,
    pub queries: Vec<Vec<f64>>,
    pub keys: Vec<Vec<f64>>,
    pub gates: GateMatrix,
    pub messages: Vec<Message>,
    pub message_matrix: Matrix,
    pub integration: GatOutput,
}

impl CommRound {
    pub fn embedding(&self, agent: usize) -> &[f64] {
        self.encoder_traces[agent].output()
    }

    pub fn integrated(&self, agent: usize) -> &[f64] {
        self.integration.out.row(agent)
    }

    pub fn n_agents(&self) -> usize {
        self.encoder_traces.len()
    }
}

impl Protocol {
    pub fn new<R: Rng + ?Sized>(cfg: &ProtocolConfig, rng: &mut R) -> Self {
        let mut sizes = vec![cfg.obs_dim];
        sizes.extend_from_slice(&cfg.encoder_hidden);
        sizes.push(cfg.embed_dim);
        let encoders = (0..cfg.groups)
            .map(|_| Mlp::new(&sizes, Activation::Tanh, Activation::Tanh, rng))
            .collect();
        Self {
            encoders,
            query: Matrix::init_uniform(cfg.attn_dim, cfg.embed_dim, rng),
            key: Matrix::init_uniform(cfg.attn_dim, cfg.embed_dim, rng),
            message: DenseParams::init(cfg.embed_dim, cfg.msg_dim, rng),
            integrator: GatParams::init(cfg.msg_dim, cfg.integrate_dim, rng),
            binarize: cfg.binarize,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.zero();
        z
    }

    pub fn embed_dim(&self) -> usize {
        self.query.cols()
    }

    pub fn integrate_dim(&self) -> usize {
        self.integrator.output_dim()
    }

    pub fn forward<R: Rng + ?Sized>(
        &self,
        obs: &[Vec<f64>],
        groups: &[usize],
        routes: &[(usize, usize)],
        policy: GatePolicy,
        rng: &mut R,
    ) -> Result<CommRound> {
        if obs.len() != groups.len() {
            return Err(Error::shape("protocol groups", obs.len(), groups.len()));
        }
        let mut encoder_traces = Vec::with_capacity(obs.len());
        for (o, &g) in obs.iter().zip(groups) {
            let enc = self
                .encoders
                .get(g)
                .ok_or_else(|| Error::invalid(format!("no encoder for group {g}")))?;
            encoder_traces.push(enc.forward_trace(o)?);
        }
        let embeddings: Vec<Vec<f64>> = encoder_traces.iter().map(|t| t.output().to_vec()).collect();
        let queries: Vec<Vec<f64>> = embeddings.iter().map(|e| self.query.matvec(e)).collect();
        let keys: Vec<Vec<f64>> = embeddings.iter().map(|e| self.key.matvec(e)).collect();
        let mut gates = schedule(&queries, &keys, routes, policy.mode, policy.phase, rng)?;
        if let Some(n) = policy.cap {
            gates.cap_incoming(n);
        }
        let messages = emit_messages(&embeddings, &self.message, self.binarize);
        let message_matrix = message_matrix(&messages)?;
        let integration = integrate(&messages, &gates, &self.integrator)?;
        Ok(CommRound {
            encoder_traces,
            queries,
            keys,
            gates,
            messages,
            message_matrix,
            integration,
        })
    }

    /// Accumulate parameter gradients for one round.
    ///
    /// `d_embed[i]` and row `i` of `d_integrated` are `∂L/∂` of agent `i`'s
    /// embedding and integrator output; `d_p` adds a direct gradient on each
    /// route's probability (the communication-cost regularizer). Gates receive
    /// straight-through gradients (`∂g/∂p = 1`) in learned mode; fixed modes
    /// have no scheduler gradient.
    pub fn backward(
        &self,
        round: &CommRound,
        groups: &[usize],
        d_embed: &[Vec<f64>],
        d_integrated: &Matrix,
        d_p: &[f64],
        grads: &mut Protocol,
    ) -> Result<()> {
        let n = round.n_agents();
        if d_embed.len() != n || d_integrated.rows() != n || d_p.len() != round.gates.len() {
            return Err(Error::shape(
                "protocol backward",
                n,
                format!("{}/{}/{}", d_embed.len(), d_integrated.rows(), d_p.len()),
            ));
        }
        let gat = gat_backward(
            &round.message_matrix,
            &self.integrator,
            INTEGRATOR_ACTIVATION,
            &round.integration,
            d_integrated,
        )?;
        add_gat(&mut grads.integrator, &gat.params);

        let mut de: Vec<Vec<f64>> = d_embed.to_vec();

        if round.gates.mode == CommMode::Learned && !round.gates.is_empty() {
            // map attention-row candidates back to routes
            let mut dp = d_p.to_vec();
            for (r, &(s, d)) in round.gates.routes.iter().enumerate() {
                let row = &round.integration.rows[d];
                if let Some(k) = row.nodes.iter().skip(1).position(|&x| x == s) {
                    dp[r] += gat.gates[d][k + 1];
                }
            }
            let scale = 1.0 / (self.query.rows() as f64).sqrt();
            let mut dq = vec![vec![0.0; self.query.rows()]; n];
            let mut dk = vec![vec![0.0; self.key.rows()]; n];
            for (r, &(s, d)) in round.gates.routes.iter().enumerate() {
                let p = round.gates.p[r];
                let ds = dp[r] * p * (1.0 - p) * scale;
                if ds == 0.0 {
                    continue;
                }
                crate::nn::matrix::axpy(ds, &round.keys[s], &mut dq[d]);
                crate::nn::matrix::axpy(ds, &round.queries[d], &mut dk[s]);
            }
            for i in 0..n {
                let e = round.embedding(i);
                grads.query.add_outer(1.0, &dq[i], e);
                grads.key.add_outer(1.0, &dk[i], e);
                let a = self.query.matvec_t(&dq[i]);
                let b = self.key.matvec_t(&dk[i]);
                for ((x, y), z) in de[i].iter_mut().zip(a).zip(b) {
                    *x += y + z;
                }
            }
        }

        // message head; binarization is straight-through
        for i in 0..n {
            let dm = gat.h.row(i);
            let e = round.embedding(i);
            grads.message.w.add_outer(1.0, dm, e);
            for (b, x) in grads.message.b.iter_mut().zip(dm) {
                *b += x;
            }
            let back = self.message.w.matvec_t(dm);
            for (x, y) in de[i].iter_mut().zip(back) {
                *x += y;
            }
        }

        for i in 0..n {
            let g = groups[i];
            self.encoders[g].backward(&round.encoder_traces[i], &de[i], &mut grads.encoders[g])?;
        }
        Ok(())
    }
}

fn add_gat(acc: &mut GatParams, g: &GatParams) {
    for (a, b) in acc.w.as_mut_slice().iter_mut().zip(g.w.as_slice()) {
        *a += b;
    }
    for (a, b) in acc.a.iter_mut().zip(&g.a) {
        *a += b;
    }
}
