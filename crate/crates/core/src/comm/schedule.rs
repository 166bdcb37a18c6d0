//! Attention scheduling: who talks to whom this step.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::matrix::dot;

/// Communication regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CommMode {
    /// No messages are ever sent.
    NonComm,
    /// Every route carries a message every step.
    FullComm,
    /// Gates are learned by the attention scheduler.
    Learned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Gates sampled `g ~ Bernoulli(p)`.
    Train,
    /// Gates thresholded `g = [p ≥ 0.5]`.
    Eval,
    /// Gates set to their probabilities, `g = p`. Only for gradient checking:
    /// it is the smooth function whose gradient the straight-through estimator uses.
    Relaxed,
}

/// Per-route communication probabilities and gates for one step.
///
/// `routes[r] = (sender, receiver)`; `p`, `g` and `scores` are aligned with it.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    pub mode: CommMode,
    pub routes: Vec<(usize, usize)>,
    pub scores: Vec<f64>,
    pub p: Vec<f64>,
    pub g: Vec<f64>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl GateMatrix {
    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    /// Messages sent this step.
    pub fn msg_count(&self) -> usize {
        self.g.iter().filter(|&&g| g > 0.0).count()
    }

    pub fn sum_p(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn mean_p(&self) -> f64 {
        if self.p.is_empty() {
            0.0
        } else {
            self.sum_p() / self.p.len() as f64
        }
    }

    pub fn mean_g(&self) -> f64 {
        if self.g.is_empty() {
            0.0
        } else {
            self.g.iter().sum::<f64>() / self.g.len() as f64
        }
    }

    /// Gate of `sender → receiver`, zero when no such route exists.
    pub fn gate(&self, sender: usize, receiver: usize) -> f64 {
        self.routes
            .iter()
            .position(|&r| r == (sender, receiver))
            .map_or(0.0, |i| self.g[i])
    }

    /// Keep at most `n` open incoming gates per receiver, preferring higher `p`
    /// (ties broken by lower sender index); the rest are closed.
    pub fn cap_incoming(&mut self, n: usize) {
        let mut receivers: Vec<usize> = self.routes.iter().map(|r| r.1).collect();
        receivers.sort_unstable();
        receivers.dedup();
        for recv in receivers {
            let mut open: Vec<usize> = (0..self.routes.len())
                .filter(|&r| self.routes[r].1 == recv && self.g[r] > 0.0)
                .collect();
            open.sort_by(|&a, &b| {
                self.p[b]
                    .total_cmp(&self.p[a])
                    .then(self.routes[a].0.cmp(&self.routes[b].0))
            });
            for &r in open.iter().skip(n) {
                self.g[r] = 0.0;
            }
        }
    }

    /// In-edge lists `(sender, gate)` per receiver for `n` nodes.
    pub fn in_edges(&self, n: usize) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); n];
        for (r, &(s, d)) in self.routes.iter().enumerate() {
            out[d].push((s, self.g[r]));
        }
        out
    }
}

/// Decide the gates of every route.
///
/// In learned mode the score of `j → i` is `q_i·k_j / √d_a` and `p = sigmoid(score)`.
/// Non-communicating and fully-communicating modes ignore queries and keys and
/// draw nothing from `rng`.
pub fn schedule<R: Rng + ?Sized>(
    queries: &[Vec<f64>],
    keys: &[Vec<f64>],
    routes: &[(usize, usize)],
    mode: CommMode,
    phase: Phase,
    rng: &mut R,
) -> Result<GateMatrix> {
    let n = queries.len();
    if keys.len() != n {
        return Err(Error::shape("schedule keys", n, keys.len()));
    }
    if let Some(&(s, d)) = routes.iter().find(|&&(s, d)| s >= n || d >= n) {
        return Err(Error::invalid(format!(
            "route {s}->{d} references an agent without an embedding ({n} embeddings)"
        )));
    }
    let r = routes.len();
    let (scores, p, g) = match mode {
        CommMode::NonComm => (vec![0.0; r], vec![0.0; r], vec![0.0; r]),
        CommMode::FullComm => (vec![0.0; r], vec![1.0; r], vec![1.0; r]),
        CommMode::Learned => {
            let scale = 1.0 / (queries.first().map_or(1, Vec::len).max(1) as f64).sqrt();
            let scores: Vec<f64> = routes
                .iter()
                .map(|&(s, d)| dot(&queries[d], &keys[s]) * scale)
                .collect();
            let p: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
            let g = p
                .iter()
                .map(|&pi| match phase {
                    Phase::Train => {
                        let u: f64 = rng.random();
                        if u < pi {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Phase::Eval => {
                        if pi >= 0.5 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Phase::Relaxed => pi,
                })
                .collect();
            (scores, p, g)
        }
    };
    Ok(GateMatrix {
        mode,
        routes: routes.to_vec(),
        scores,
        p,
        g,
    })
}
