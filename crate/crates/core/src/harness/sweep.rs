//! Collaboration sweep: evaluate trained gnncomm policies with the number of
//! open incoming edges per receiver capped at `n`.

use std::fmt::Write as _;

use super::config::{Algo, ExperimentConfig};
use super::experiment::{
    begin_artifacts, evaluate, finish_artifacts, make_env, run_experiment, EpisodeSummary, SeedRun,
};
use crate::comm::CommMode;
use crate::error::{Error, Result};
use crate::marl::MultiAgentEnv;
use crate::rng::{purpose, stream};

pub const SWEEP_HEADER: &str = "setting,n,return_mean,sum_se,ee,msgs_per_step";

/// One sweep setting, averaged over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// `cap`, `learned` (uncapped), `noncomm` or `fullcomm`.
    pub setting: &'static str,
    pub n: Option<usize>,
    pub summary: EpisodeSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub notices: Vec<String>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut text = format!("{SWEEP_HEADER}\n");
        for r in &self.rows {
            let n = r.n.map(|n| n.to_string()).unwrap_or_default();
            let s = &r.summary;
            let _ = writeln!(
                text,
                "{},{n},{},{},{},{}",
                r.setting, s.return_mean, s.sum_se, s.ee, s.msgs_per_step
            );
        }
        text
    }

    pub fn row(&self, setting: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.setting == setting)
    }

    pub fn caps(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.setting == "cap")
    }
}

/// Evaluate already-trained gnncomm runs under each participation level.
///
/// A cap above `agents − 1` cannot bind and is clamped with a notice. Besides
/// the capped rows the table carries the uncapped learned gates and the same
/// networks with gates forced shut (`noncomm`) and forced open (`fullcomm`).
pub fn sweep_trained(
    cfg: &ExperimentConfig,
    runs: &mut [SeedRun],
    env: &mut dyn MultiAgentEnv,
    participation: &[usize],
) -> Result<SweepTable> {
    if runs.is_empty() {
        return Err(Error::invalid("sweep needs at least one trained seed"));
    }
    let max_cap = env.n_agents().saturating_sub(1);
    let mut notices = Vec::new();
    let mut settings: Vec<(&'static str, Option<usize>, CommMode)> = Vec::new();
    for &n in participation {
        let c = if n > max_cap {
            let msg = format!("participation {n} exceeds agents - 1 = {max_cap}; clamped");
            log::warn!("{msg}");
            notices.push(msg);
            max_cap
        } else {
            n
        };
        settings.push(("cap", Some(c), CommMode::Learned));
    }
    settings.push(("learned", None, CommMode::Learned));
    settings.push(("noncomm", None, CommMode::NonComm));
    settings.push(("fullcomm", None, CommMode::FullComm));

    let mut rows = Vec::with_capacity(settings.len());
    for (setting, n, mode) in settings {
        let per_seed: Vec<EpisodeSummary> = runs
            .iter_mut()
            .map(|r| evaluate(&mut r.trainer, env, cfg.eval_seed, cfg.eval_episodes, mode, n))
            .collect::<Result<_>>()?;
        rows.push(SweepRow {
            setting,
            n,
            summary: EpisodeSummary::mean(&per_seed),
        });
    }
    Ok(SweepTable { rows, notices })
}

/// Train gnncomm for every seed, sweep `cfg.sweep_caps` and write `sweep.csv`
/// next to the training artifacts.
pub fn sweep_collaboration(cfg: &ExperimentConfig) -> Result<SweepTable> {
    let mut cfg = cfg.clone();
    cfg.algo = Algo::GnnComm;
    let mut outcome = run_experiment(&cfg)?;
    let mut env = make_env(&cfg, &mut stream(cfg.eval_seed, purpose::EVAL))?;
    begin_artifacts(&outcome.dir)?;
    let table = sweep_trained(&cfg, &mut outcome.runs, &mut env, &cfg.sweep_caps)?;
    let dir = &outcome.dir;
    std::fs::write(dir.join("sweep.csv"), table.to_csv()).map_err(|e| Error::io(dir.join("sweep.csv"), e))?;
    let meta = format!(
        "participation n = per-agent cap on open incoming message edges, top-n by p\n{}",
        table.notices.iter().map(|n| format!("notice: {n}\n")).collect::<String>()
    );
    std::fs::write(dir.join("sweep_meta.txt"), meta).map_err(|e| Error::io(dir.join("sweep_meta.txt"), e))?;
    finish_artifacts(dir)?;
    Ok(table)
}
