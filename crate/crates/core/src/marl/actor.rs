use rand::Rng;
use rand_distr::StandardNormal;

use crate::comm::{CommRound, GatePolicy, Protocol, ProtocolConfig};
use crate::error::{Error, Result};
use crate::nn::{Activation, Matrix, Mlp, MlpTrace, Params};

#[derive(Debug, Clone, PartialEq)]
pub struct ActorConfig {
    pub protocol: ProtocolConfig,
    pub head_hidden: Vec<usize>,
    pub action_dim: usize,
}

impl ActorConfig {
    pub fn new(obs_dim: usize, action_dim: usize, groups: usize) -> Self {
        Self {
            protocol: ProtocolConfig::new(obs_dim, groups),
            head_hidden: vec![64],
            action_dim,
        }
    }
}

/// Decentralized policy: the communication protocol plus one action head per
/// group. Head input is `[embedding ‖ integrated messages]`, output is tanh-squashed.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub protocol: Protocol,
    pub heads: Vec<Mlp>,
}

#[derive(Debug, Clone)]
pub struct ActorRound {
    pub comm: CommRound,
    pub heads: Vec<MlpTrace>,
}

impl ActorRound {
    pub fn actions(&self) -> Vec<Vec<f64>> {
        self.heads.iter().map(|t| t.output().to_vec()).collect()
    }
}

impl Params for Actor {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.protocol.visit(&format!("{prefix}protocol."), f);
        for (g, h) in self.heads.iter().enumerate() {
            h.visit(&format!("{prefix}head.{g}."), f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.protocol.visit_mut(f);
        for h in &mut self.heads {
            h.visit_mut(f);
        }
    }
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(cfg: &ActorConfig, rng: &mut R) -> Self {
        let protocol = Protocol::new(&cfg.protocol, rng);
        let mut sizes = vec![protocol.embed_dim() + protocol.integrate_dim()];
        sizes.extend_from_slice(&cfg.head_hidden);
        sizes.push(cfg.action_dim);
        let heads = (0..cfg.protocol.groups)
            .map(|_| Mlp::new(&sizes, Activation::Tanh, Activation::Tanh, rng))
            .collect();
        Self { protocol, heads }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.zero();
        z
    }

    pub fn action_dim(&self) -> usize {
        self.heads[0].output_dim()
    }

    pub fn forward<R: Rng + ?Sized>(
        &self,
        obs: &[Vec<f64>],
        groups: &[usize],
        routes: &[(usize, usize)],
        policy: GatePolicy,
        rng: &mut R,
    ) -> Result<ActorRound> {
        let comm = self.protocol.forward(obs, groups, routes, policy, rng)?;
        let mut heads = Vec::with_capacity(obs.len());
        for (i, &g) in groups.iter().enumerate() {
            let mut input = comm.embedding(i).to_vec();
            input.extend_from_slice(comm.integrated(i));
            let head = self
                .heads
                .get(g)
                .ok_or_else(|| Error::invalid(format!("no action head for group {g}")))?;
            heads.push(head.forward_trace(&input)?);
        }
        Ok(ActorRound { comm, heads })
    }

    pub fn backward(
        &self,
        round: &ActorRound,
        groups: &[usize],
        d_actions: &[Vec<f64>],
        d_p: &[f64],
        grads: &mut Actor,
    ) -> Result<()> {
        let n = groups.len();
        let de_dim = self.protocol.embed_dim();
        let mut d_embed = Vec::with_capacity(n);
        let mut d_int = Matrix::zeros(n, self.protocol.integrate_dim());
        for i in 0..n {
            let g = groups[i];
            let d_in = self.heads[g].backward(&round.heads[i], &d_actions[i], &mut grads.heads[g])?;
            d_embed.push(d_in[..de_dim].to_vec());
            d_int.row_mut(i).copy_from_slice(&d_in[de_dim..]);
        }
        self.protocol
            .backward(&round.comm, groups, &d_embed, &d_int, d_p, &mut grads.protocol)
    }
}

/// Deterministic policy output plus Gaussian exploration noise, clipped to [-1, 1].
pub fn add_exploration_noise<R: Rng + ?Sized>(actions: &mut [Vec<f64>], sigma: f64, rng: &mut R) {
    if sigma <= 0.0 {
        return;
    }
    for a in actions.iter_mut().flatten() {
        let n: f64 = rng.sample(StandardNormal);
        *a = (*a + sigma * n).clamp(-1.0, 1.0);
    }
}
