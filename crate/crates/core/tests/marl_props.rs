use gnncomm::comm::{CommMode, GatePolicy, GateStats, Phase};
use gnncomm::env::{ScenarioConfig, Task};
use gnncomm::graph::StructureKind;
use gnncomm::marl::actor::add_exploration_noise;
use gnncomm::marl::env::NodePosition;
use gnncomm::marl::{
    toy_meet_env, CellFreeEnv, EnvStep, Maddpg, MultiAgentEnv, ReplayBuffer, RolloutOptions, TrainConfig, Transition,
};
use gnncomm::nn::{param_distance, soft_update, Params};
use gnncomm::rng::SimRng;
use gnncomm::Result;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

/// One agent on a line: observation `[x]`, action sets `x`, reward `x`.
struct LineEnv {
    x: f64,
    len: usize,
}

impl MultiAgentEnv for LineEnv {
    fn n_agents(&self) -> usize {
        1
    }
    fn obs_dim(&self) -> usize {
        1
    }
    fn action_dim(&self) -> usize {
        1
    }
    fn groups(&self) -> Vec<usize> {
        vec![0]
    }
    fn episode_len(&self) -> usize {
        self.len
    }
    fn reset(&mut self, _rng: &mut SimRng) -> Result<()> {
        self.x = 0.0;
        Ok(())
    }
    fn observe(&self) -> Vec<Vec<f64>> {
        vec![vec![self.x]]
    }
    fn routes(&self) -> Vec<(usize, usize)> {
        Vec::new()
    }
    fn step(&mut self, actions: &[Vec<f64>], msg_count: usize, _rng: &mut SimRng) -> Result<EnvStep> {
        self.x = actions[0][0];
        Ok(EnvStep { rewards: vec![self.x], sum_se: 0.0, ee: 0.0, msg_count })
    }
    fn positions(&self) -> Vec<NodePosition> {
        vec![(0, "agent", self.x, 0.0)]
    }
}

fn small_cfg() -> TrainConfig {
    TrainConfig {
        batch_size: 8,
        buffer_capacity: 256,
        warmup_steps: 8,
        critic_hidden: vec![8],
        encoder_hidden: vec![8],
        head_hidden: vec![8],
        embed_dim: 4,
        attn_dim: 3,
        msg_dim: 2,
        integrate_dim: 3,
        ..Default::default()
    }
}

fn transition(obs: f64, action: f64, reward: f64, next: f64, done: bool) -> Transition {
    Transition {
        obs: vec![vec![obs]],
        actions: vec![vec![action]],
        routes: Vec::new(),
        gates: GateStats::default(),
        rewards: vec![reward],
        next_obs: vec![vec![next]],
        next_routes: Vec::new(),
        done,
    }
}

#[test]
fn td_target_hand_case() {
    let env = LineEnv { x: 0.0, len: 1 };
    let mut cfg = small_cfg();
    cfg.gamma = 0.9;
    cfg.critic_hidden = vec![];
    cfg.head_hidden = vec![];
    let mut m = Maddpg::new(&env, cfg, CommMode::NonComm, &mut SimRng::seed_from_u64(1)).unwrap();
    // target actor outputs tanh(0.5) for any input
    m.actor_target.scale(0.0);
    m.actor_target.heads[0].layers[0].params.b[0] = 0.5;
    // linear target critic Q' = 2·o + 3·a − 1
    let critic = &mut m.critic_targets[0].net.layers[0].params;
    critic.w.as_mut_slice().copy_from_slice(&[2.0, 3.0]);
    critic.b[0] = -1.0;
    let batch = [transition(0.3, 0.1, 1.5, 0.4, false), transition(0.3, 0.1, 1.5, 0.4, true)];
    let refs: Vec<&Transition> = batch.iter().collect();
    let y = m.td_targets(&refs, &mut SimRng::seed_from_u64(2)).unwrap();
    let hand = 1.5 + 0.9 * (2.0 * 0.4 + 3.0 * 0.5f64.tanh() - 1.0);
    assert!((y[0][0] - hand).abs() < 1e-12, "{} vs {hand}", y[0][0]);
    assert_eq!(y[1][0], 1.5);

    m.cfg.gamma = 0.0;
    let y = m.td_targets(&refs, &mut SimRng::seed_from_u64(2)).unwrap();
    assert_eq!(y[0][0], 1.5);
}

#[test]
fn train_step_before_warmup_is_a_flagged_noop() {
    let env = LineEnv { x: 0.0, len: 1 };
    let mut m = Maddpg::new(&env, small_cfg(), CommMode::NonComm, &mut SimRng::seed_from_u64(1)).unwrap();
    let before = m.actor.to_flat();
    m.buffer.push(transition(0.0, 0.0, 0.0, 0.0, false));
    let report = m.train_step(&mut SimRng::seed_from_u64(3)).unwrap();
    assert!(!report.trained);
    assert_eq!(m.actor.to_flat(), before);
}

#[test]
fn tau_one_copies_online_into_target() {
    let env = LineEnv { x: 0.0, len: 1 };
    let mut cfg = small_cfg();
    cfg.tau = 1.0;
    let mut m = Maddpg::new(&env, cfg, CommMode::NonComm, &mut SimRng::seed_from_u64(4)).unwrap();
    let mut rng = SimRng::seed_from_u64(5);
    for _ in 0..16 {
        let x = rng.random_range(-1.0..1.0);
        m.buffer.push(transition(x, x, x, x, false));
    }
    assert!(m.train_step(&mut rng).unwrap().trained);
    assert_eq!(m.actor_target.to_flat(), m.actor.to_flat());
    assert_eq!(m.critic_targets[0].to_flat(), m.critics[0].to_flat());
}

#[test]
fn target_distance_contracts_by_one_minus_tau_per_update() {
    let env = toy_meet_env(&mut SimRng::seed_from_u64(0));
    let mut cfg = small_cfg();
    cfg.tau = 0.05;
    let mut m = Maddpg::new(&env, cfg, CommMode::Learned, &mut SimRng::seed_from_u64(6)).unwrap();
    m.actor_target.scale(0.0);
    let d0 = param_distance(&m.actor_target, &m.actor);
    assert!(d0 > 0.0);
    for k in 1..=50 {
        m.soft_update_targets();
        let want = d0 * 0.95f64.powi(k);
        let got = param_distance(&m.actor_target, &m.actor);
        assert!((got - want).abs() <= 1e-12 * d0, "k={k}: {got} vs {want}");
    }
}

#[test]
fn soft_update_toward_itself_is_identity() {
    let env = toy_meet_env(&mut SimRng::seed_from_u64(0));
    let m = Maddpg::new(&env, small_cfg(), CommMode::Learned, &mut SimRng::seed_from_u64(7)).unwrap();
    let mut target = m.actor.clone();
    for _ in 0..100 {
        soft_update(&mut target, &m.actor, 0.3);
    }
    assert!(param_distance(&target, &m.actor) < 1e-14);
}

#[test]
fn targets_mirror_online_shapes() {
    let env = toy_meet_env(&mut SimRng::seed_from_u64(0));
    let m = Maddpg::new(&env, small_cfg(), CommMode::Learned, &mut SimRng::seed_from_u64(7)).unwrap();
    let names = |p: &dyn Fn(&mut dyn FnMut(&str, &[f64]))| {
        let mut v = Vec::new();
        p(&mut |n, x| v.push((n.to_string(), x.len())));
        v
    };
    assert_eq!(names(&|f| m.actor.visit("", f)), names(&|f| m.actor_target.visit("", f)));
    for (c, t) in m.critics.iter().zip(&m.critic_targets) {
        assert_eq!(names(&|f| c.visit("", f)), names(&|f| t.visit("", f)));
    }
}

#[test]
fn critic_loss_falls_monotonically_on_a_fixed_transition() {
    let env = LineEnv { x: 0.0, len: 1 };
    let mut cfg = small_cfg();
    cfg.gamma = 0.0;
    let mut m = Maddpg::new(&env, cfg, CommMode::NonComm, &mut SimRng::seed_from_u64(8)).unwrap();
    for _ in 0..16 {
        m.buffer.push(transition(0.4, -0.2, 0.7, 0.1, false));
    }
    let mut rng = SimRng::seed_from_u64(9);
    let losses: Vec<f64> = (0..100).map(|_| m.train_step(&mut rng).unwrap().critic_loss).collect();
    for w in losses.windows(2) {
        assert!(w[1] < w[0], "{} then {}", w[0], w[1]);
    }
}

#[test]
fn zero_length_episode_is_empty() {
    let mut env = toy_meet_env(&mut SimRng::seed_from_u64(0));
    env.episode_len = 0;
    let mut m = Maddpg::new(&env, small_cfg(), CommMode::Learned, &mut SimRng::seed_from_u64(1)).unwrap();
    let rec = m
        .run_episode(&mut env, RolloutOptions::new(CommMode::Learned, Phase::Train), &mut SimRng::seed_from_u64(2), &mut SimRng::seed_from_u64(3))
        .unwrap();
    assert_eq!(rec.steps(), 0);
    assert_eq!(rec.total_return(), 0.0);
    assert!(m.buffer.is_empty());
}

#[test]
fn noncomm_sends_nothing_and_returns_add_up() {
    let mut rng = SimRng::seed_from_u64(10);
    let mut env = CellFreeEnv::new(ScenarioConfig { episode_len: 12, ..Default::default() }, Task::Mobility, StructureKind::Heterogeneous, &mut rng).unwrap();
    let mut m = Maddpg::new(&env, small_cfg(), CommMode::NonComm, &mut SimRng::seed_from_u64(1)).unwrap();
    let rec = m
        .run_episode(&mut env, RolloutOptions::new(CommMode::NonComm, Phase::Train), &mut rng, &mut SimRng::seed_from_u64(3))
        .unwrap();
    assert_eq!(rec.steps(), 12);
    assert!(rec.msgs.iter().all(|&x| x == 0));
    assert_eq!(m.buffer.len(), 12);
    let per_agent: f64 = rec.return_per_agent.iter().sum::<f64>() / rec.return_per_agent.len() as f64;
    assert!((rec.total_return() - per_agent).abs() < 1e-9);
    assert!((rec.return_mean() - rec.rewards.iter().sum::<f64>()).abs() < 1e-9);
}

#[test]
fn agent_count_mismatch_is_rejected() {
    let toy = toy_meet_env(&mut SimRng::seed_from_u64(0));
    let mut m = Maddpg::new(&toy, small_cfg(), CommMode::Learned, &mut SimRng::seed_from_u64(1)).unwrap();
    let mut rng = SimRng::seed_from_u64(2);
    let mut env = CellFreeEnv::new(ScenarioConfig::default(), Task::Mobility, StructureKind::Bipartite, &mut rng).unwrap();
    let err = m.run_episode(&mut env, RolloutOptions::new(CommMode::Learned, Phase::Train), &mut rng, &mut SimRng::seed_from_u64(3));
    assert!(err.is_err());
}

fn loss_sequence(mode: CommMode, forced: Option<CommMode>, cfg: TrainConfig, scenario: ScenarioConfig) -> Vec<(f64, f64)> {
    let mut env_rng = SimRng::seed_from_u64(20);
    let mut env = CellFreeEnv::new(scenario, Task::Mobility, StructureKind::Heterogeneous, &mut env_rng).unwrap();
    let mut m = Maddpg::new(&env, cfg, mode, &mut SimRng::seed_from_u64(21)).unwrap();
    if let Some(f) = forced {
        m.mode = f;
    }
    let mut agent_rng = SimRng::seed_from_u64(22);
    let mut out = Vec::new();
    for _ in 0..4 {
        let rec = m
            .run_episode(&mut env, RolloutOptions::new(m.mode, Phase::Train), &mut env_rng, &mut agent_rng)
            .unwrap();
        out.extend(rec.losses.iter().map(|l| (l.critic_loss, l.actor_loss)));
    }
    out
}

#[test]
fn seeded_training_repeats_its_loss_sequence() {
    let scenario = ScenarioConfig { episode_len: 10, ..Default::default() };
    let a = loss_sequence(CommMode::Learned, None, small_cfg(), scenario.clone());
    let b = loss_sequence(CommMode::Learned, None, small_cfg(), scenario);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn forced_full_gates_reduce_to_plain_gat_maddpg() {
    let scenario = ScenarioConfig { episode_len: 10, msg_penalty: 0.0, ..Default::default() };
    let cfg = TrainConfig { lambda_p: 0.0, ..small_cfg() };
    let forced = loss_sequence(CommMode::Learned, Some(CommMode::FullComm), cfg.clone(), scenario.clone());
    let wired = loss_sequence(CommMode::FullComm, None, cfg, scenario);
    assert!(!forced.is_empty());
    assert_eq!(forced, wired);
}

#[test]
fn noise_free_actions_repeat_and_noisy_actions_stay_in_range() {
    let env = toy_meet_env(&mut SimRng::seed_from_u64(0));
    let m = Maddpg::new(&env, small_cfg(), CommMode::Learned, &mut SimRng::seed_from_u64(1)).unwrap();
    let obs = env.observe();
    let policy = GatePolicy::new(CommMode::Learned, Phase::Eval);
    let (a, _) = m.act(&obs, &env.routes(), policy, 0.0, &mut SimRng::seed_from_u64(2)).unwrap();
    let (b, _) = m.act(&obs, &env.routes(), policy, 0.0, &mut SimRng::seed_from_u64(3)).unwrap();
    assert_eq!(a, b);
    let mut rng = SimRng::seed_from_u64(4);
    for _ in 0..100 {
        let (c, _) = m.act(&obs, &env.routes(), policy, 10.0, &mut rng).unwrap();
        assert!(c.iter().flatten().all(|x| (-1.0..=1.0).contains(x)));
    }
    let mut z = vec![vec![0.0; 3]; 2];
    add_exploration_noise(&mut z, 0.0, &mut rng);
    assert_eq!(z, vec![vec![0.0; 3]; 2]);
}

#[test]
fn noncomm_and_fullcomm_differ_only_in_the_integrator_input() {
    let env = toy_meet_env(&mut SimRng::seed_from_u64(0));
    let m = Maddpg::new(&env, small_cfg(), CommMode::Learned, &mut SimRng::seed_from_u64(1)).unwrap();
    let obs = env.observe();
    let groups = env.groups();
    let mut rng = SimRng::seed_from_u64(2);
    let none = m.actor.forward(&obs, &groups, &env.routes(), GatePolicy::new(CommMode::NonComm, Phase::Eval), &mut rng).unwrap();
    let full = m.actor.forward(&obs, &groups, &env.routes(), GatePolicy::new(CommMode::FullComm, Phase::Eval), &mut rng).unwrap();
    for i in 0..2 {
        assert_eq!(none.comm.embedding(i), full.comm.embedding(i));
        assert_eq!(none.comm.messages[i], full.comm.messages[i]);
        assert_ne!(none.comm.integrated(i), full.comm.integrated(i));
    }
    // ablating the full gates recovers the non-communicating round exactly
    let mut gates = full.comm.gates.clone();
    gates.g.iter_mut().for_each(|g| *g = 0.0);
    let ablated = gnncomm::comm::integrate(&full.comm.messages, &gates, &m.actor.protocol.integrator).unwrap();
    assert_eq!(ablated.out, none.comm.integration.out);
}

#[test]
fn checkpoint_round_trip_restores_every_network() {
    let env = toy_meet_env(&mut SimRng::seed_from_u64(0));
    let a = Maddpg::new(&env, small_cfg(), CommMode::Learned, &mut SimRng::seed_from_u64(1)).unwrap();
    let mut b = Maddpg::new(&env, small_cfg(), CommMode::Learned, &mut SimRng::seed_from_u64(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nets.params");
    a.save(&path).unwrap();
    b.load(&path).unwrap();
    assert_eq!(a.actor, b.actor);
    assert_eq!(a.actor_target, b.actor_target);
    assert_eq!(a.critics, b.critics);
    assert_eq!(a.critic_targets, b.critic_targets);
}

#[test]
fn train_config_ranges() {
    for bad in [
        TrainConfig { gamma: 1.0, ..Default::default() },
        TrainConfig { gamma: -0.1, ..Default::default() },
        TrainConfig { tau: 0.0, ..Default::default() },
        TrainConfig { tau: 1.5, ..Default::default() },
        TrainConfig { batch_size: 30_000, ..Default::default() },
    ] {
        assert!(bad.validate().is_err());
    }
    assert!(TrainConfig::default().validate().is_ok());
}

proptest! {
    #[test]
    fn replay_evicts_oldest_first(capacity in 1usize..40, extra in 0usize..40) {
        let mut buf = ReplayBuffer::new(capacity);
        for i in 0..capacity + extra {
            buf.push(transition(i as f64, 0.0, 0.0, 0.0, false));
        }
        prop_assert_eq!(buf.len(), capacity);
        let mut kept: Vec<usize> = buf.iter().map(|t| t.obs[0][0] as usize).collect();
        kept.sort_unstable();
        prop_assert_eq!(kept, (extra..capacity + extra).collect::<Vec<_>>());
    }
}
