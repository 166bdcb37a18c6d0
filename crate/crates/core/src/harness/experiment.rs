//! Training runs, evaluation and the artifact files they leave behind.
//!
//! Output directory layout:
//!
//! | file | columns |
//! |------|---------|
//! | `metrics.csv` | `episode,seed,algo,task,structure,return_mean,sum_se,ee,comm_prob,msgs_per_step` |
//! | `trajectories.csv` | `seed,episode,step,node_id,kind,x,y` |
//! | `gates.csv` | `seed,episode,mean_p,mean_g` |
//! | `eval.csv` | `seed,algo,task,structure,return_mean,sum_se,ee,comm_prob,msgs_per_step` |
//! | `run_meta.txt` | config echo, version, wall time |
//! | `checkpoints/seed-<s>.params` | final networks of seed `s` |
//!
//! `run.partial` exists while a run is in progress and is removed only after
//! every file is complete.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{Algo, ExperimentConfig};
use crate::comm::{comm_probability, CommMode, Phase};
use crate::error::{Error, Result};
use crate::marl::{CellFreeEnv, EpisodeRecord, Maddpg, MultiAgentEnv, RolloutOptions};
use crate::rng::{purpose, stream, SimRng};

pub const METRICS_HEADER: &str = "episode,seed,algo,task,structure,return_mean,sum_se,ee,comm_prob,msgs_per_step";
pub const TRAJECTORY_HEADER: &str = "seed,episode,step,node_id,kind,x,y";
pub const GATES_HEADER: &str = "seed,episode,mean_p,mean_g";
pub const EVAL_HEADER: &str = "seed,algo,task,structure,return_mean,sum_se,ee,comm_prob,msgs_per_step";
pub const PARTIAL_MARKER: &str = "run.partial";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub episode: usize,
    pub seed: u64,
    pub algo: Algo,
    pub task: crate::env::Task,
    pub structure: crate::graph::StructureKind,
    pub return_mean: f64,
    pub sum_se: f64,
    pub ee: f64,
    pub comm_prob: f64,
    pub msgs_per_step: f64,
}

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.episode,
            self.seed,
            self.algo.as_str(),
            self.task.as_str(),
            self.structure.as_str(),
            self.return_mean,
            self.sum_se,
            self.ee,
            self.comm_prob,
            self.msgs_per_step
        )
    }
}

/// Episode-level aggregates, means over episodes when several are summarized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpisodeSummary {
    pub return_mean: f64,
    pub sum_se: f64,
    pub ee: f64,
    pub comm_prob: f64,
    pub msgs_per_step: f64,
}

impl EpisodeSummary {
    pub fn of(rec: &EpisodeRecord) -> Self {
        Self {
            return_mean: rec.return_mean(),
            sum_se: rec.mean_sum_se(),
            ee: rec.mean_ee(),
            comm_prob: comm_probability(&rec.gates).unwrap_or(0.0),
            msgs_per_step: rec.msgs_per_step(),
        }
    }

    pub fn mean(items: &[EpisodeSummary]) -> Self {
        let n = items.len().max(1) as f64;
        let mut m = Self::default();
        for s in items {
            m.return_mean += s.return_mean / n;
            m.sum_se += s.sum_se / n;
            m.ee += s.ee / n;
            m.comm_prob += s.comm_prob / n;
            m.msgs_per_step += s.msgs_per_step / n;
        }
        m
    }
}

/// Everything one seed's training produced.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub metrics: Vec<MetricsRow>,
    /// `(episode, mean p, mean g)`.
    pub gates: Vec<(usize, f64, f64)>,
    /// `(messages, routes)` of every training step.
    pub step_msgs: Vec<(usize, usize)>,
    pub trajectory_csv: String,
    pub eval: EpisodeSummary,
    pub trainer: Maddpg,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub runs: Vec<SeedRun>,
}

/// The cell-free environment of a config, built from `rng`.
pub fn make_env(cfg: &ExperimentConfig, rng: &mut SimRng) -> Result<CellFreeEnv> {
    CellFreeEnv::new(cfg.scenario.clone(), cfg.task, cfg.structure, rng)
}

/// Fresh trainer for `seed`; initial weights come from the seed's INIT stream.
pub fn make_trainer(env: &dyn MultiAgentEnv, cfg: &ExperimentConfig, seed: u64) -> Result<Maddpg> {
    let mut train = cfg.train.clone();
    train.seed = seed;
    Maddpg::new(env, train, cfg.algo.mode(), &mut stream(seed, purpose::INIT))
}

/// Mean over `episodes` evaluation episodes. The environment and agent
/// streams restart from `eval_seed` on every call, so calls with different
/// trainers or gate settings face the same scenarios.
pub fn evaluate(
    trainer: &mut Maddpg,
    env: &mut dyn MultiAgentEnv,
    eval_seed: u64,
    episodes: usize,
    mode: CommMode,
    cap: Option<usize>,
) -> Result<EpisodeSummary> {
    let mut env_rng = stream(eval_seed, purpose::EVAL);
    let mut agent_rng = stream(eval_seed, purpose::AGENT);
    let opts = RolloutOptions {
        mode,
        phase: Phase::Eval,
        cap,
        record_trajectory: false,
    };
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let rec = trainer.run_episode(env, opts, &mut env_rng, &mut agent_rng)?;
        out.push(EpisodeSummary::of(&rec));
    }
    Ok(EpisodeSummary::mean(&out))
}

/// Train one seed on `env` and evaluate it on `eval_env`.
///
/// `env` must already be built from the seed's ENV stream when its
/// construction is random; episodes continue that same stream.
pub fn train_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    env: &mut dyn MultiAgentEnv,
    env_rng: &mut SimRng,
    eval_env: &mut dyn MultiAgentEnv,
) -> Result<SeedRun> {
    let mut trainer = make_trainer(env, cfg, seed)?;
    let mut agent_rng = stream(seed, purpose::AGENT);
    let mode = cfg.algo.mode();
    let episodes = cfg.train.episodes;
    let mut run = SeedRun {
        seed,
        metrics: Vec::with_capacity(episodes),
        gates: Vec::with_capacity(episodes),
        step_msgs: Vec::new(),
        trajectory_csv: String::new(),
        eval: EpisodeSummary::default(),
        trainer: trainer.clone(),
    };
    for episode in 0..episodes {
        let record_trajectory = cfg.trajectory_every > 0
            && (episode % cfg.trajectory_every == 0 || episode + 1 == episodes);
        let opts = RolloutOptions {
            mode,
            phase: Phase::Train,
            cap: None,
            record_trajectory,
        };
        let rec = trainer.run_episode(env, opts, env_rng, &mut agent_rng)?;
        let s = EpisodeSummary::of(&rec);
        run.metrics.push(MetricsRow {
            episode,
            seed,
            algo: cfg.algo,
            task: cfg.task,
            structure: cfg.structure,
            return_mean: s.return_mean,
            sum_se: s.sum_se,
            ee: s.ee,
            comm_prob: s.comm_prob,
            msgs_per_step: s.msgs_per_step,
        });
        let n = rec.gates.len().max(1) as f64;
        run.gates.push((
            episode,
            rec.gates.iter().map(|g| g.mean_p()).sum::<f64>() / n,
            rec.gates.iter().map(|g| g.mean_g()).sum::<f64>() / n,
        ));
        run.step_msgs.extend(rec.msgs.iter().copied().zip(rec.routes.iter().copied()));
        for (step, (id, kind, x, y)) in &rec.trajectory {
            let _ = writeln!(run.trajectory_csv, "{seed},{episode},{step},{id},{kind},{x},{y}");
        }
        if (episode + 1) % 100 == 0 {
            log::info!(
                "seed {seed} episode {}: return {:.4} comm_prob {:.3}",
                episode + 1,
                s.return_mean,
                s.comm_prob
            );
        }
    }
    run.eval = evaluate(&mut trainer, eval_env, cfg.eval_seed, cfg.eval_episodes, mode, None)?;
    run.trainer = trainer;
    Ok(run)
}

/// Train and evaluate one seed on the configured cell-free scenario.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    let mut env_rng = stream(seed, purpose::ENV);
    let mut env = make_env(cfg, &mut env_rng)?;
    let mut eval_env = make_env(cfg, &mut stream(cfg.eval_seed, purpose::EVAL))?;
    train_seed(cfg, seed, &mut env, &mut env_rng, &mut eval_env)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn checkpoint_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join("checkpoints").join(format!("seed-{seed}.params"))
}

pub fn eval_csv(cfg: &ExperimentConfig, evals: &[(u64, EpisodeSummary)]) -> String {
    let mut text = format!("{EVAL_HEADER}\n");
    for (seed, e) in evals {
        let _ = writeln!(
            text,
            "{seed},{},{},{},{},{},{},{},{}",
            cfg.algo.as_str(),
            cfg.task.as_str(),
            cfg.structure.as_str(),
            e.return_mean,
            e.sum_se,
            e.ee,
            e.comm_prob,
            e.msgs_per_step
        );
    }
    text
}

/// Create `dir` and drop the in-progress marker into it.
pub fn begin_artifacts(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("checkpoints")).map_err(|e| Error::io(dir, e))?;
    write(
        &dir.join(PARTIAL_MARKER),
        "run in progress or interrupted; files in this directory are incomplete\n",
    )
}

pub fn finish_artifacts(dir: &Path) -> Result<()> {
    let marker = dir.join(PARTIAL_MARKER);
    fs::remove_file(&marker).map_err(|e| Error::io(marker, e))
}

/// Train every configured seed and write the artifact directory.
///
/// Seeds run one after another, each with its own environment, networks and
/// streams, so a seed's rows never depend on which other seeds are listed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let dir = cfg.out_dir.clone();
    begin_artifacts(&dir)?;
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let run = run_seed(cfg, seed)?;
        run.trainer.save(&checkpoint_path(&dir, seed))?;
        runs.push(run);
    }

    let mut metrics = format!("{METRICS_HEADER}\n");
    let mut traj = format!("{TRAJECTORY_HEADER}\n");
    let mut gates = format!("{GATES_HEADER}\n");
    for run in &runs {
        for row in &run.metrics {
            metrics.push_str(&row.to_csv());
            metrics.push('\n');
        }
        traj.push_str(&run.trajectory_csv);
        for (ep, p, g) in &run.gates {
            let _ = writeln!(gates, "{},{ep},{p},{g}", run.seed);
        }
    }
    write(&dir.join("metrics.csv"), &metrics)?;
    write(&dir.join("trajectories.csv"), &traj)?;
    write(&dir.join("gates.csv"), &gates)?;
    let evals: Vec<(u64, EpisodeSummary)> = runs.iter().map(|r| (r.seed, r.eval)).collect();
    write(&dir.join("eval.csv"), &eval_csv(cfg, &evals))?;
    write(&dir.join("run_meta.txt"), &run_meta(cfg, started.elapsed().as_secs_f64()))?;
    finish_artifacts(&dir)?;
    Ok(ExperimentOutcome { dir, runs })
}

pub fn run_meta(cfg: &ExperimentConfig, wall_time_s: f64) -> String {
    format!(
        "# config\n{}# build\nversion = {}\nwall_time_s = {wall_time_s:.3}\n",
        cfg.to_config_text(),
        env!("CARGO_PKG_VERSION")
    )
}

/// Evaluate saved checkpoints of every configured seed and write `eval.csv`.
pub fn evaluate_checkpoints(cfg: &ExperimentConfig) -> Result<Vec<(u64, EpisodeSummary)>> {
    cfg.validate()?;
    let mut eval_env = make_env(cfg, &mut stream(cfg.eval_seed, purpose::EVAL))?;
    let mut out = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let mut trainer = make_trainer(&eval_env, cfg, seed)?;
        trainer.load(&checkpoint_path(&cfg.out_dir, seed))?;
        let e = evaluate(&mut trainer, &mut eval_env, cfg.eval_seed, cfg.eval_episodes, cfg.algo.mode(), None)?;
        out.push((seed, e));
    }
    write(&cfg.out_dir.join("eval.csv"), &eval_csv(cfg, &out))?;
    Ok(out)
}
