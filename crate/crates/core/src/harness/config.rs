//! Flat `key = value` experiment configuration.
//!
//! One assignment per line; `#` starts a comment; blank lines are ignored.
//! Lists are comma separated, brackets optional (`seeds = 1, 2, 3` or `seeds = [1, 2, 3]`). Every key in [`KEYS`] has a
//! default, and each key left unset produces a notice. Unknown keys, malformed
//! lines and unparsable values are errors carrying the line number.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::comm::CommMode;
use crate::env::{ScenarioConfig, Task};
use crate::error::{Error, Result};
use crate::graph::StructureKind;
use crate::marl::TrainConfig;

/// The three compared algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    /// Independent agents, no messages.
    NonComm,
    /// Every route carries a message every step.
    Comm,
    /// Attention-scheduled gates.
    GnnComm,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::NonComm, Algo::Comm, Algo::GnnComm];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::NonComm => "noncomm",
            Algo::Comm => "comm",
            Algo::GnnComm => "gnncomm",
        }
    }

    pub fn mode(self) -> CommMode {
        match self {
            Algo::NonComm => CommMode::NonComm,
            Algo::Comm => CommMode::FullComm,
            Algo::GnnComm => CommMode::Learned,
        }
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noncomm" => Ok(Algo::NonComm),
            "comm" => Ok(Algo::Comm),
            "gnncomm" => Ok(Algo::GnnComm),
            other => Err(Error::invalid(format!("unknown algo {other:?} (noncomm|comm|gnncomm)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub train: TrainConfig,
    pub algo: Algo,
    pub task: Task,
    pub structure: StructureKind,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Evaluation episodes run after training, on scenarios shared by every
    /// seed and algorithm.
    pub eval_episodes: usize,
    /// Master seed of the shared evaluation scenarios.
    pub eval_seed: u64,
    /// Log positions of every n-th episode (and the last one); 0 disables.
    pub trajectory_every: usize,
    /// Participation levels (incoming-edge caps) for the collaboration sweep.
    pub sweep_caps: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            train: TrainConfig::default(),
            algo: Algo::GnnComm,
            task: Task::Mobility,
            structure: StructureKind::Heterogeneous,
            seeds: vec![1],
            out_dir: PathBuf::from("runs/default"),
            eval_episodes: 20,
            eval_seed: 1000,
            trajectory_every: 100,
            sweep_caps: vec![0, 1, 2, 3],
        }
    }
}

trait ConfigValue: Sized {
    fn parse_value(s: &str) -> std::result::Result<Self, String>;
    fn render(&self) -> String;
}

macro_rules! display_value {
    ($($t:ty),*) => {$(
        impl ConfigValue for $t {
            fn parse_value(s: &str) -> std::result::Result<Self, String> {
                s.parse().map_err(|e| format!("expected {}: {e}", stringify!($t)))
            }
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

display_value!(f64, usize, u64, bool);

impl<T: ConfigValue> ConfigValue for Vec<T> {
    /// Comma-separated, optionally wrapped in `[...]`.
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let s = s.strip_prefix('[').and_then(|x| x.strip_suffix(']')).unwrap_or(s);
        if s.trim().is_empty() {
            return Ok(Vec::new());
        }
        s.split(',').map(|x| T::parse_value(x.trim())).collect()
    }

    fn render(&self) -> String {
        self.iter().map(T::render).collect::<Vec<_>>().join(", ")
    }
}

impl ConfigValue for PathBuf {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        Ok(PathBuf::from(s))
    }

    fn render(&self) -> String {
        self.display().to_string()
    }
}

macro_rules! tagged_value {
    ($($t:ty),*) => {$(
        impl ConfigValue for $t {
            fn parse_value(s: &str) -> std::result::Result<Self, String> {
                s.parse().map_err(|e: Error| e.to_string())
            }
            fn render(&self) -> String {
                self.as_str().to_string()
            }
        }
    )*};
}

tagged_value!(Algo, Task, StructureKind);

macro_rules! config_keys {
    ($($key:literal => $($path:ident).+),* $(,)?) => {
        /// Every recognised key, in the order `run_meta` echoes them.
        pub const KEYS: &[&str] = &[$($key),*];

        impl ExperimentConfig {
            fn set_key(&mut self, key: &str, value: &str) -> Option<std::result::Result<(), String>> {
                match key {
                    $($key => Some(ConfigValue::parse_value(value).map(|v| self.$($path).+ = v)),)*
                    _ => None,
                }
            }

            /// Current value of `key` in config-file syntax.
            pub fn get_key(&self, key: &str) -> Option<String> {
                match key {
                    $($key => Some(self.$($path).+.render()),)*
                    _ => None,
                }
            }
        }
    };
}

config_keys! {
    "algo" => algo,
    "task" => task,
    "structure" => structure,
    "seeds" => seeds,
    "out_dir" => out_dir,
    "eval_episodes" => eval_episodes,
    "eval_seed" => eval_seed,
    "trajectory_every" => trajectory_every,
    "sweep_caps" => sweep_caps,
    "area_width_m" => scenario.area_width_m,
    "area_height_m" => scenario.area_height_m,
    "n_static_ap" => scenario.n_static_ap,
    "n_vehicle_ap" => scenario.n_vehicle_ap,
    "n_uav_ap" => scenario.n_uav_ap,
    "n_ue" => scenario.n_ue,
    "ap_max_power_mw" => scenario.ap_max_power_mw,
    "noise_power_dbm" => scenario.noise_power_dbm,
    "bandwidth_hz" => scenario.bandwidth_hz,
    "shadow_sigma_db" => scenario.shadow_sigma_db,
    "d0_m" => scenario.d0_m,
    "d1_m" => scenario.d1_m,
    "pathloss_const_db" => scenario.pathloss_const_db,
    "v_vehicle_max" => scenario.v_vehicle_max,
    "v_uav_max" => scenario.v_uav_max,
    "v_ue" => scenario.v_ue,
    "circuit_power_mw" => scenario.circuit_power_mw,
    "msg_energy_mj" => scenario.msg_energy_mj,
    "msg_penalty" => scenario.msg_penalty,
    "episode_len" => scenario.episode_len,
    "radius_ap_ap_m" => scenario.radius_ap_ap_m,
    "radius_ap_ue_m" => scenario.radius_ap_ue_m,
    "radius_ue_ue_m" => scenario.radius_ue_ue_m,
    "n_sense" => scenario.n_sense,
    "ee_scale" => scenario.ee_scale,
    "power_logit_scale" => scenario.power_logit_scale,
    "gamma" => train.gamma,
    "tau" => train.tau,
    "actor_lr" => train.actor_lr,
    "critic_lr" => train.critic_lr,
    "batch_size" => train.batch_size,
    "buffer_capacity" => train.buffer_capacity,
    "noise_sigma" => train.noise_sigma,
    "noise_decay" => train.noise_decay,
    "episodes" => train.episodes,
    "warmup_steps" => train.warmup_steps,
    "lambda_p" => train.lambda_p,
    "reward_scale" => train.reward_scale,
    "train_every" => train.train_every,
    "grad_clip" => train.grad_clip,
    "action_reg" => train.action_reg,
    "critic_hidden" => train.critic_hidden,
    "encoder_hidden" => train.encoder_hidden,
    "head_hidden" => train.head_hidden,
    "embed_dim" => train.embed_dim,
    "attn_dim" => train.attn_dim,
    "msg_dim" => train.msg_dim,
    "integrate_dim" => train.integrate_dim,
    "binarize_messages" => train.binarize_messages,
}

impl ExperimentConfig {
    /// Whole-config checks; the error names the first offending key.
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.train.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds must list at least one seed"));
        }
        Ok(())
    }

    /// The config in file syntax, one `key = value` per line, every key present.
    pub fn to_config_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get_key(k).unwrap_or_default()))
            .collect()
    }

    /// Set `key` from its textual value, as a config line would.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self.set_key(key, value.trim()) {
            None => Err(Error::invalid(format!("unknown key {key:?}"))),
            Some(r) => r.map_err(|m| Error::invalid(format!("{key}: {m}"))),
        }
    }
}

/// A parsed config plus the notices for keys left at their defaults.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub notices: Vec<String>,
}

pub fn parse_config(text: &str) -> Result<LoadedConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Config { line, message };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got {content:?}")))?;
        let key = key.trim();
        if let Some(prev) = seen.get(key) {
            return Err(err(format!("duplicate key {key:?} (first set on line {prev})")));
        }
        match cfg.set_key(key, value.trim()) {
            None => return Err(err(format!("unknown key {key:?}"))),
            Some(Err(m)) => return Err(err(format!("{key}: {m}"))),
            Some(Ok(())) => {}
        }
        seen.insert(key.to_string(), line);
    }
    if let Err(e) = cfg.validate() {
        let message = match e {
            Error::InvalidInput(m) => m,
            other => other.to_string(),
        };
        // point at the line that set the offending key when there is one
        let line = KEYS
            .iter()
            .filter(|k| message.starts_with(**k))
            .max_by_key(|k| k.len())
            .and_then(|k| seen.get(*k).copied())
            .unwrap_or(0);
        return Err(Error::Config { line, message });
    }
    let notices = KEYS
        .iter()
        .filter(|k| !seen.contains_key(**k))
        .map(|k| format!("{k} not set, using default {}", cfg.get_key(k).unwrap_or_default()))
        .collect();
    Ok(LoadedConfig { config: cfg, notices })
}

/// Read and parse a config file, logging a notice per defaulted key.
pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let loaded = parse_config(&text)?;
    for n in &loaded.notices {
        log::info!("{n}");
    }
    Ok(loaded)
}
