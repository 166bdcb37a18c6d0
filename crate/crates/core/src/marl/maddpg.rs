//! Centralized-critic, decentralized-actor training with scheduled communication.

use std::path::Path;

use super::actor::{add_exploration_noise, Actor, ActorConfig};
use super::buffer::{ReplayBuffer, Transition};
use super::critic::{joint_input, Critic};
use super::env::{MultiAgentEnv, NodePosition};
use crate::comm::{CommMode, GatePolicy, GateStats, Phase};
use crate::error::{Error, Result};
use crate::nn::{adam_step, soft_update, AdamState, Checkpoint, Params};
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub noise_sigma: f64,
    /// Multiplies the exploration noise after every training episode.
    pub noise_decay: f64,
    pub episodes: usize,
    /// Transitions required before the first update.
    pub warmup_steps: usize,
    pub seed: u64,
    /// Weight of the mean communication probability in the actor loss.
    pub lambda_p: f64,
    /// Multiplies rewards before they enter the TD target.
    pub reward_scale: f64,
    /// Environment steps between updates.
    pub train_every: usize,
    pub critic_hidden: Vec<usize>,
    pub encoder_hidden: Vec<usize>,
    pub head_hidden: Vec<usize>,
    pub embed_dim: usize,
    pub attn_dim: usize,
    pub msg_dim: usize,
    pub integrate_dim: usize,
    pub binarize_messages: bool,
    /// Global gradient-norm clip for both nets; 0 disables it.
    pub grad_clip: f64,
    /// Weight of the mean squared action in the actor loss.
    pub action_reg: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            tau: 0.01,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            batch_size: 64,
            buffer_capacity: 20_000,
            noise_sigma: 0.3,
            noise_decay: 0.999,
            episodes: 2000,
            warmup_steps: 1000,
            seed: 1,
            lambda_p: 0.01,
            reward_scale: 1.0,
            train_every: 1,
            critic_hidden: vec![64, 64],
            encoder_hidden: vec![64],
            head_hidden: vec![64],
            embed_dim: 32,
            attn_dim: 16,
            msg_dim: 8,
            integrate_dim: 16,
            binarize_messages: false,
            grad_clip: 0.0,
            action_reg: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!("gamma = {} out of range: γ ∈ [0,1)", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::invalid(format!("tau = {} out of range: τ ∈ (0,1]", self.tau)));
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return Err(Error::invalid(format!(
                "batch_size = {} must be in 1..=buffer_capacity ({})",
                self.batch_size, self.buffer_capacity
            )));
        }
        for (name, v) in [("actor_lr", self.actor_lr), ("critic_lr", self.critic_lr)] {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.noise_sigma >= 0.0) || !(self.noise_decay > 0.0 && self.noise_decay <= 1.0) {
            return Err(Error::invalid("noise_sigma must be >= 0 and noise_decay in (0,1]"));
        }
        if self.train_every == 0 {
            return Err(Error::invalid("train_every must be at least 1"));
        }
        if !(self.grad_clip >= 0.0) || !(self.action_reg >= 0.0) {
            return Err(Error::invalid("grad_clip and action_reg must be >= 0"));
        }
        if !(self.lambda_p >= 0.0) || !(self.reward_scale > 0.0) {
            return Err(Error::invalid("lambda_p must be >= 0 and reward_scale > 0"));
        }
        for (name, v) in [
            ("embed_dim", self.embed_dim),
            ("attn_dim", self.attn_dim),
            ("msg_dim", self.msg_dim),
            ("integrate_dim", self.integrate_dim),
        ] {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    pub fn actor_config(&self, obs_dim: usize, action_dim: usize, groups: usize) -> ActorConfig {
        let mut cfg = ActorConfig::new(obs_dim, action_dim, groups);
        cfg.head_hidden = self.head_hidden.clone();
        cfg.protocol.encoder_hidden = self.encoder_hidden.clone();
        cfg.protocol.embed_dim = self.embed_dim;
        cfg.protocol.attn_dim = self.attn_dim;
        cfg.protocol.msg_dim = self.msg_dim;
        cfg.protocol.integrate_dim = self.integrate_dim;
        cfg.protocol.binarize = self.binarize_messages;
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossReport {
    /// False when the call was a no-op because the buffer is below warmup.
    pub trained: bool,
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub mean_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutOptions {
    pub mode: CommMode,
    pub phase: Phase,
    pub cap: Option<usize>,
    pub record_trajectory: bool,
}

impl RolloutOptions {
    pub fn new(mode: CommMode, phase: Phase) -> Self {
        Self {
            mode,
            phase,
            cap: None,
            record_trajectory: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeRecord {
    /// Agent-mean reward per step.
    pub rewards: Vec<f64>,
    pub return_per_agent: Vec<f64>,
    pub sum_se: Vec<f64>,
    pub ee: Vec<f64>,
    pub msgs: Vec<usize>,
    /// Routes available per step (the fully-communicating message count).
    pub routes: Vec<usize>,
    pub gates: Vec<GateStats>,
    /// `(step, node)` positions; step 0 is the initial placement.
    pub trajectory: Vec<(usize, NodePosition)>,
    pub losses: Vec<LossReport>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

impl EpisodeRecord {
    pub fn steps(&self) -> usize {
        self.rewards.len()
    }

    pub fn total_return(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn return_mean(&self) -> f64 {
        mean(self.return_per_agent.iter().copied())
    }

    pub fn mean_sum_se(&self) -> f64 {
        mean(self.sum_se.iter().copied())
    }

    pub fn mean_ee(&self) -> f64 {
        mean(self.ee.iter().copied())
    }

    pub fn msgs_per_step(&self) -> f64 {
        mean(self.msgs.iter().map(|&m| m as f64))
    }

    /// Mean per-step cost `-reward`.
    pub fn mean_cost(&self) -> f64 {
        -mean(self.rewards.iter().copied())
    }
}

fn clip_norm(mut g: Vec<f64>, max_norm: f64) -> Vec<f64> {
    if max_norm > 0.0 {
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > max_norm {
            g.iter_mut().for_each(|x| *x *= max_norm / norm);
        }
    }
    g
}

/// All networks, optimizer state and replay memory of one training context.
#[derive(Debug, Clone)]
pub struct Maddpg {
    pub cfg: TrainConfig,
    pub mode: CommMode,
    pub groups: Vec<usize>,
    pub actor: Actor,
    pub actor_target: Actor,
    /// One centralized critic per parameter-sharing group.
    pub critics: Vec<Critic>,
    pub critic_targets: Vec<Critic>,
    actor_opt: AdamState,
    critic_opts: Vec<AdamState>,
    pub buffer: ReplayBuffer,
    pub noise_sigma: f64,
    env_steps: usize,
    obs_dim: usize,
    action_dim: usize,
}

impl Maddpg {
    pub fn new(env: &dyn MultiAgentEnv, cfg: TrainConfig, mode: CommMode, rng: &mut SimRng) -> Result<Self> {
        cfg.validate()?;
        let groups = env.groups();
        if groups.len() != env.n_agents() {
            return Err(Error::invalid("environment groups do not cover every agent"));
        }
        let n_groups = env.n_groups();
        let actor = Actor::new(&cfg.actor_config(env.obs_dim(), env.action_dim(), n_groups), rng);
        let critic_in = env.n_agents() * (env.obs_dim() + env.action_dim());
        let critics: Vec<Critic> = (0..n_groups)
            .map(|_| Critic::new(critic_in, &cfg.critic_hidden, rng))
            .collect();
        Ok(Self {
            actor_opt: AdamState::new(actor.num_params()),
            critic_opts: critics.iter().map(|c| AdamState::new(c.num_params())).collect(),
            actor_target: actor.clone(),
            critic_targets: critics.clone(),
            actor,
            critics,
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            noise_sigma: cfg.noise_sigma,
            env_steps: 0,
            obs_dim: env.obs_dim(),
            action_dim: env.action_dim(),
            groups,
            mode,
            cfg,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.groups.len()
    }

    fn n_groups(&self) -> usize {
        self.critics.len()
    }

    /// Joint actions for one step: policy output plus exploration noise of
    /// standard deviation `sigma`, clipped to [-1, 1].
    pub fn act(
        &self,
        obs: &[Vec<f64>],
        routes: &[(usize, usize)],
        policy: GatePolicy,
        sigma: f64,
        rng: &mut SimRng,
    ) -> Result<(Vec<Vec<f64>>, crate::comm::GateMatrix)> {
        let round = self.actor.forward(obs, &self.groups, routes, policy, rng)?;
        let mut actions = round.actions();
        add_exploration_noise(&mut actions, sigma, rng);
        Ok((actions, round.comm.gates))
    }

    /// `y_i = scale · r_i + γ (1 − done) Q'_{group(i)}(s', μ'(s'))` per sample and agent.
    pub fn td_targets(&self, batch: &[&Transition], rng: &mut SimRng) -> Result<Vec<Vec<f64>>> {
        let policy = GatePolicy::new(self.mode, Phase::Eval);
        batch
            .iter()
            .map(|t| {
                let scaled: Vec<f64> = t.rewards.iter().map(|r| r * self.cfg.reward_scale).collect();
                if t.done || self.cfg.gamma == 0.0 {
                    return Ok(scaled);
                }
                let next = self
                    .actor_target
                    .forward(&t.next_obs, &self.groups, &t.next_routes, policy, rng)?
                    .actions();
                let input = joint_input(&t.next_obs, &next);
                let q_next: Vec<f64> = self
                    .critic_targets
                    .iter()
                    .map(|c| c.q(&input))
                    .collect::<Result<_>>()?;
                Ok(scaled
                    .iter()
                    .zip(&self.groups)
                    .map(|(r, &g)| r + self.cfg.gamma * q_next[g])
                    .collect())
            })
            .collect()
    }

    /// One critic and actor update from a replay batch, then soft target updates.
    pub fn train_step(&mut self, rng: &mut SimRng) -> Result<LossReport> {
        if self.buffer.len() < self.cfg.warmup_steps.max(self.cfg.batch_size) {
            return Ok(LossReport::default());
        }
        let batch: Vec<Transition> = self
            .buffer
            .sample(self.cfg.batch_size, rng)
            .into_iter()
            .cloned()
            .collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let b = batch.len() as f64;
        let g_count = self.n_groups();

        // critics
        let targets = self.td_targets(&refs, rng)?;
        let mut critic_loss = 0.0;
        for c in 0..g_count {
            let members: Vec<usize> = (0..self.n_agents()).filter(|&i| self.groups[i] == c).collect();
            let mut grads = self.critics[c].zeros_like();
            let mut loss = 0.0;
            for (t, y) in batch.iter().zip(&targets) {
                let yc = members.iter().map(|&i| y[i]).sum::<f64>() / members.len() as f64;
                let input = joint_input(&t.obs, &t.actions);
                let trace = self.critics[c].trace(&input)?;
                let err = trace.output()[0] - yc;
                loss += err * err / b;
                self.critics[c].backward(&trace, 2.0 * err / b, &mut grads)?;
            }
            let mut flat = self.critics[c].to_flat();
            adam_step(&mut flat, &clip_norm(grads.to_flat(), self.cfg.grad_clip), &mut self.critic_opts[c], self.cfg.critic_lr);
            self.critics[c].set_flat(&flat);
            critic_loss += loss / g_count as f64;
        }

        // actor: ascend the mean of the group critics through every agent's action
        let policy = GatePolicy::new(self.mode, Phase::Train);
        let mut grads = self.actor.zeros_like();
        let mut scratch: Vec<Critic> = self.critics.iter().map(Critic::zeros_like).collect();
        let mut actor_loss = 0.0;
        let mut mean_p = 0.0;
        let action_offset = self.n_agents() * self.obs_dim;
        for t in &batch {
            let round = self.actor.forward(&t.obs, &self.groups, &t.routes, policy, rng)?;
            let actions = round.actions();
            let input = joint_input(&t.obs, &actions);
            let mut d_input = vec![0.0; input.len()];
            for (c, critic) in self.critics.iter().enumerate() {
                let trace = critic.trace(&input)?;
                actor_loss -= trace.output()[0] / (g_count as f64 * b);
                let d = critic.backward(&trace, -1.0 / (g_count as f64 * b), &mut scratch[c])?;
                for (x, y) in d_input.iter_mut().zip(d) {
                    *x += y;
                }
            }
            let reg_scale = self.cfg.action_reg / (b * actions.len() as f64 * self.action_dim as f64);
            let d_actions: Vec<Vec<f64>> = d_input[action_offset..]
                .chunks(self.action_dim)
                .zip(&actions)
                .map(|(d, a)| d.iter().zip(a).map(|(d, a)| d + 2.0 * reg_scale * a).collect())
                .collect();
            actor_loss += reg_scale * actions.iter().flatten().map(|a| a * a).sum::<f64>();
            let gates = &round.comm.gates;
            let reg = if self.mode == CommMode::Learned && !gates.is_empty() {
                self.cfg.lambda_p / (gates.len() as f64 * b)
            } else {
                0.0
            };
            actor_loss += self.cfg.lambda_p * gates.mean_p() / b;
            mean_p += gates.mean_p() / b;
            let d_p = vec![reg; gates.len()];
            self.actor.backward(&round, &self.groups, &d_actions, &d_p, &mut grads)?;
        }
        let mut flat = self.actor.to_flat();
        adam_step(&mut flat, &clip_norm(grads.to_flat(), self.cfg.grad_clip), &mut self.actor_opt, self.cfg.actor_lr);
        self.actor.set_flat(&flat);

        self.soft_update_targets();
        Ok(LossReport {
            trained: true,
            critic_loss,
            actor_loss,
            mean_p,
        })
    }

    pub fn soft_update_targets(&mut self) {
        let tau = self.cfg.tau;
        soft_update(&mut self.actor_target, &self.actor, tau);
        for (t, c) in self.critic_targets.iter_mut().zip(&self.critics) {
            soft_update(t, c, tau);
        }
    }

    /// Roll one episode: observe → encode → schedule → exchange → integrate →
    /// act → step. In the train phase transitions are stored, updates run every
    /// `train_every` environment steps and the exploration noise decays at the end.
    pub fn run_episode(
        &mut self,
        env: &mut dyn MultiAgentEnv,
        opts: RolloutOptions,
        env_rng: &mut SimRng,
        agent_rng: &mut SimRng,
    ) -> Result<EpisodeRecord> {
        if env.n_agents() != self.n_agents() || env.obs_dim() != self.obs_dim || env.action_dim() != self.action_dim {
            return Err(Error::invalid(format!(
                "environment has {} agents (obs {}, action {}), trainer expects {} (obs {}, action {})",
                env.n_agents(),
                env.obs_dim(),
                env.action_dim(),
                self.n_agents(),
                self.obs_dim,
                self.action_dim
            )));
        }
        let training = opts.phase == Phase::Train;
        let sigma = if training { self.noise_sigma } else { 0.0 };
        let policy = GatePolicy {
            mode: opts.mode,
            phase: opts.phase,
            cap: opts.cap,
        };
        env.reset(env_rng)?;
        let mut rec = EpisodeRecord {
            return_per_agent: vec![0.0; self.n_agents()],
            ..Default::default()
        };
        if opts.record_trajectory {
            rec.trajectory.extend(env.positions().into_iter().map(|p| (0, p)));
        }
        let mut obs = env.observe();
        let mut routes = env.routes();
        for step in 0..env.episode_len() {
            let (actions, gates) = self.act(&obs, &routes, policy, sigma, agent_rng)?;
            let msgs = gates.msg_count();
            let bound_ok = match opts.mode {
                CommMode::NonComm => msgs == 0,
                CommMode::FullComm => msgs == routes.len(),
                CommMode::Learned => msgs <= routes.len(),
            };
            if !bound_ok {
                return Err(Error::invalid(format!(
                    "{msgs} messages on {} routes violates the {:?} message bound",
                    routes.len(),
                    opts.mode
                )));
            }
            let out = env.step(&actions, msgs, env_rng)?;
            let next_obs = env.observe();
            let next_routes = env.routes();

            rec.rewards.push(mean(out.rewards.iter().copied()));
            for (acc, r) in rec.return_per_agent.iter_mut().zip(&out.rewards) {
                *acc += r;
            }
            rec.sum_se.push(out.sum_se);
            rec.ee.push(out.ee);
            rec.msgs.push(msgs);
            rec.routes.push(routes.len());
            rec.gates.push(GateStats::from(&gates));
            if opts.record_trajectory {
                rec.trajectory.extend(env.positions().into_iter().map(|p| (step + 1, p)));
            }

            if training {
                self.buffer.push(Transition {
                    obs: std::mem::take(&mut obs),
                    actions,
                    routes: std::mem::take(&mut routes),
                    gates: GateStats::from(&gates),
                    rewards: out.rewards,
                    next_obs: next_obs.clone(),
                    next_routes: next_routes.clone(),
                    done: false,
                });
                self.env_steps += 1;
                if self.env_steps % self.cfg.train_every == 0 {
                    let report = self.train_step(agent_rng)?;
                    if report.trained {
                        rec.losses.push(report);
                    }
                }
            }
            obs = next_obs;
            routes = next_routes;
        }
        if training {
            self.noise_sigma *= self.cfg.noise_decay;
        }
        Ok(rec)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::from_params(&self.actor, "actor.");
        ck.append(&self.actor_target, "actor_target.");
        ck.append(&self.critics, "critic.");
        ck.append(&self.critic_targets, "critic_target.");
        ck
    }

    pub fn restore(&mut self, ck: &Checkpoint) -> Result<()> {
        ck.restore(&mut self.actor, "actor.")?;
        ck.restore(&mut self.actor_target, "actor_target.")?;
        ck.restore(&mut self.critics, "critic.")?;
        ck.restore(&mut self.critic_targets, "critic_target.")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.checkpoint().save(path)
    }

    pub fn load(&mut self, path: &Path) -> Result<()> {
        self.restore(&Checkpoint::load(path)?)
    }
}
