//! Device placement, mobility, power mapping, observations and rewards.

use rand::Rng;

use super::channel::{compute_ee, compute_se, draw_channel, ChannelRealization};
use super::config::{ScenarioConfig, Task};
use crate::error::{Error, Result};
use crate::nn::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeviceKind {
    StaticAp,
    VehicleAp,
    UavAp,
    Ue,
}

impl DeviceKind {
    pub fn is_ap(self) -> bool {
        self != DeviceKind::Ue
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::StaticAp => "static_ap",
            DeviceKind::VehicleAp => "vehicle_ap",
            DeviceKind::UavAp => "uav_ap",
            DeviceKind::Ue => "ue",
        }
    }

    /// Index into the AP-kind one-hot of observations.
    pub fn ap_index(self) -> Option<usize> {
        match self {
            DeviceKind::StaticAp => Some(0),
            DeviceKind::VehicleAp => Some(1),
            DeviceKind::UavAp => Some(2),
            DeviceKind::Ue => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceState {
    pub id: usize,
    pub kind: DeviceKind,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub se_per_ue: Vec<f64>,
    pub sum_se: f64,
    pub ee: f64,
    pub msg_count: usize,
    pub reward_per_agent: Vec<f64>,
}

/// Full simulator state. Devices are ordered static APs, vehicle APs, UAV APs,
/// then UEs; every AP is an agent and agent `i` is device `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub cfg: ScenarioConfig,
    pub task: Task,
    pub devices: Vec<DeviceState>,
    waypoints: Vec<Position>,
    pub channel: ChannelRealization,
    pub t: usize,
}

const GAIN_OFFSET_DB: f64 = 110.0;
const GAIN_SCALE_DB: f64 = 20.0;
const AP_KINDS: usize = 3;
const SLOT_WIDTH: usize = 3;

fn uniform_position<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Position {
    Position::new(
        rng.random_range(0.0..=cfg.area_width_m),
        rng.random_range(0.0..=cfg.area_height_m),
    )
}

/// Reflect a coordinate into `[0, limit]`.
fn reflect(mut v: f64, limit: f64) -> f64 {
    // repeated folding covers steps longer than the area
    for _ in 0..8 {
        if v < 0.0 {
            v = -v;
        } else if v > limit {
            v = 2.0 * limit - v;
        } else {
            return v;
        }
    }
    v.clamp(0.0, limit)
}

/// Map `K + 1` actions in [-1, 1] to a power row: softmax of scaled logits,
/// the last slot being power left unused.
pub fn power_row(actions: &[f64], cfg: &ScenarioConfig) -> Vec<f64> {
    let logits: Vec<f64> = actions.iter().map(|a| a * cfg.power_logit_scale).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps[..exps.len() - 1]
        .iter()
        .map(|e| cfg.ap_max_power_mw * e / total)
        .collect()
}

impl World {
    /// Fresh episode: uniform placement of every device, new UE waypoints, new channel.
    pub fn reset<R: Rng + ?Sized>(cfg: &ScenarioConfig, task: Task, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let kinds = std::iter::repeat_n(DeviceKind::StaticAp, cfg.n_static_ap)
            .chain(std::iter::repeat_n(DeviceKind::VehicleAp, cfg.n_vehicle_ap))
            .chain(std::iter::repeat_n(DeviceKind::UavAp, cfg.n_uav_ap))
            .chain(std::iter::repeat_n(DeviceKind::Ue, cfg.n_ue));
        let devices: Vec<DeviceState> = kinds
            .enumerate()
            .map(|(id, kind)| DeviceState {
                id,
                kind,
                position: uniform_position(cfg, rng),
            })
            .collect();
        let waypoints = (0..cfg.n_ue).map(|_| uniform_position(cfg, rng)).collect();
        Self::from_devices(cfg.clone(), task, devices, waypoints, rng)
    }

    /// Build a world from explicit device positions (APs first, then UEs).
    pub fn from_devices<R: Rng + ?Sized>(
        cfg: ScenarioConfig,
        task: Task,
        devices: Vec<DeviceState>,
        waypoints: Vec<Position>,
        rng: &mut R,
    ) -> Result<Self> {
        let n_ap = devices.iter().filter(|d| d.kind.is_ap()).count();
        if devices.iter().take(n_ap).any(|d| !d.kind.is_ap()) {
            return Err(Error::invalid("APs must precede UEs in the device list"));
        }
        if waypoints.len() != devices.len() - n_ap {
            return Err(Error::invalid("one waypoint per UE is required"));
        }
        let (aps, ues) = split_positions(&devices, n_ap);
        let channel = draw_channel(&aps, &ues, &cfg, rng)?;
        Ok(Self {
            cfg,
            task,
            devices,
            waypoints,
            channel,
            t: 0,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.channel.n_ap()
    }

    pub fn n_ue(&self) -> usize {
        self.channel.n_ue()
    }

    pub fn aps(&self) -> &[DeviceState] {
        &self.devices[..self.n_agents()]
    }

    pub fn ues(&self) -> &[DeviceState] {
        &self.devices[self.n_agents()..]
    }

    pub fn action_dim(&self) -> usize {
        match self.task {
            Task::Mobility => 2,
            Task::Power => self.n_ue() + 1,
        }
    }

    fn sensed_slots(&self) -> usize {
        match self.task {
            Task::Mobility => self.cfg.n_sense,
            Task::Power => self.n_ue(),
        }
    }

    pub fn obs_dim(&self) -> usize {
        2 + AP_KINDS + SLOT_WIDTH * self.sensed_slots()
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.cfg.episode_len
    }

    /// Local observation of one AP agent.
    ///
    /// Layout: normalized own position, AP-kind one-hot, then per sensed UE the
    /// normalized large-scale gain and the normalized relative position. In the
    /// mobility task the `n_sense` nearest UEs are sensed, nearest first; in the
    /// power task every UE is sensed in index order so that slot `k` lines up
    /// with power logit `k`. Missing slots are zero. Other APs are never visible.
    pub fn observe(&self, agent: usize) -> Result<Vec<f64>> {
        if agent >= self.n_agents() {
            return Err(Error::invalid(format!(
                "agent {agent} out of range ({} agents)",
                self.n_agents()
            )));
        }
        let (w, h) = (self.cfg.area_width_m, self.cfg.area_height_m);
        let me = &self.devices[agent];
        let mut obs = Vec::with_capacity(self.obs_dim());
        obs.push(me.position.x / w);
        obs.push(me.position.y / h);
        let mut onehot = [0.0; AP_KINDS];
        onehot[me.kind.ap_index().expect("agents are APs")] = 1.0;
        obs.extend_from_slice(&onehot);

        let ues = self.ues();
        let mut order: Vec<usize> = (0..ues.len()).collect();
        if self.task == Task::Mobility {
            order.sort_by(|&a, &b| {
                let da = me.position.distance(&ues[a].position);
                let db = me.position.distance(&ues[b].position);
                da.total_cmp(&db).then(a.cmp(&b))
            });
        }
        let slots = self.sensed_slots();
        for &k in order.iter().take(slots) {
            let gain_db = 10.0 * self.channel.beta[(agent, k)].log10();
            obs.push((gain_db + GAIN_OFFSET_DB) / GAIN_SCALE_DB);
            obs.push((ues[k].position.x - me.position.x) / w);
            obs.push((ues[k].position.y - me.position.y) / h);
        }
        obs.resize(self.obs_dim(), 0.0);
        Ok(obs)
    }

    pub fn observe_all(&self) -> Vec<Vec<f64>> {
        (0..self.n_agents())
            .map(|i| self.observe(i).expect("agent index in range"))
            .collect()
    }

    fn max_speed(&self, kind: DeviceKind) -> f64 {
        match kind {
            DeviceKind::StaticAp => 0.0,
            DeviceKind::VehicleAp => self.cfg.v_vehicle_max,
            DeviceKind::UavAp => self.cfg.v_uav_max,
            DeviceKind::Ue => self.cfg.v_ue,
        }
    }

    /// Power allocation implied by the actions for this task.
    pub fn power_matrix(&self, actions: &[Vec<f64>]) -> Matrix {
        let (m, k) = (self.n_agents(), self.n_ue());
        let mut p = Matrix::zeros(m, k);
        for ap in 0..m {
            match self.task {
                Task::Mobility => p.row_mut(ap).fill(self.cfg.ap_max_power_mw / k as f64),
                Task::Power => p.row_mut(ap).copy_from_slice(&power_row(&actions[ap], &self.cfg)),
            }
        }
        p
    }

    fn move_ues<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n_ap = self.n_agents();
        let v = self.cfg.v_ue;
        for u in 0..self.n_ue() {
            let pos = self.devices[n_ap + u].position;
            let wp = self.waypoints[u];
            let d = pos.distance(&wp);
            let next = if d <= v {
                self.waypoints[u] = uniform_position(&self.cfg, rng);
                wp
            } else {
                Position::new(pos.x + v * (wp.x - pos.x) / d, pos.y + v * (wp.y - pos.y) / d)
            };
            self.devices[n_ap + u].position = next;
        }
    }

    /// Advance one step. `msg_count` is the number of messages the agents sent
    /// this step; it is charged in the reward (mobility) and in the EE.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        actions: &[Vec<f64>],
        msg_count: usize,
        rng: &mut R,
    ) -> Result<StepOutcome> {
        let m = self.n_agents();
        if actions.len() != m {
            return Err(Error::invalid(format!(
                "expected {m} actions, got {}",
                actions.len()
            )));
        }
        let dim = self.action_dim();
        for (i, a) in actions.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::invalid(format!(
                    "agent {i}: action has {} components, expected {dim}",
                    a.len()
                )));
            }
            if a.iter().any(|x| !(-1.0..=1.0).contains(x)) {
                return Err(Error::invalid(format!("agent {i}: action outside [-1, 1]")));
            }
        }

        if self.task == Task::Mobility {
            let (w, h) = (self.cfg.area_width_m, self.cfg.area_height_m);
            for (ap, a) in actions.iter().enumerate() {
                let v = self.max_speed(self.devices[ap].kind);
                let p = &mut self.devices[ap].position;
                p.x = reflect(p.x + a[0] * v, w);
                p.y = reflect(p.y + a[1] * v, h);
            }
            self.move_ues(rng);
        }
        let (aps, ues) = split_positions(&self.devices, m);
        self.channel = draw_channel(&aps, &ues, &self.cfg, rng)?;
        self.t += 1;

        let power = self.power_matrix(actions);
        let se_per_ue = compute_se(&self.channel, &power, &self.cfg)?;
        let sum_se: f64 = se_per_ue.iter().sum();
        let ee = compute_ee(sum_se, &power, msg_count, &self.cfg);
        let reward = match self.task {
            Task::Mobility => sum_se - self.cfg.msg_penalty * msg_count as f64,
            Task::Power => ee / self.cfg.ee_scale,
        };
        Ok(StepOutcome {
            se_per_ue,
            sum_se,
            ee,
            msg_count,
            reward_per_agent: vec![reward; m],
        })
    }
}

fn split_positions(devices: &[DeviceState], n_ap: usize) -> (Vec<Position>, Vec<Position>) {
    let aps = devices[..n_ap].iter().map(|d| d.position).collect();
    let ues = devices[n_ap..].iter().map(|d| d.position).collect();
    (aps, ues)
}
