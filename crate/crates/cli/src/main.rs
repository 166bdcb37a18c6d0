//! `gnncomm` command line: train, evaluate, sweep and gradient-check.
//!
//! Exit codes: 0 ok, 1 config error, 2 runtime error, 3 gradcheck failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gnncomm::harness::{
    evaluate_checkpoints, gradcheck_suite, load_config, run_experiment, sweep_collaboration, ExperimentConfig,
    GRADCHECK_TOLERANCE,
};
use gnncomm::Error;

#[derive(Parser)]
#[command(name = "gnncomm", version, about = "Learned GNN communication for multi-agent cell-free mMIMO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured seed and write metrics, trajectories, gates and checkpoints.
    Train(RunArgs),
    /// Evaluate saved checkpoints on the shared evaluation scenarios.
    Eval(RunArgs),
    /// Train gnncomm and evaluate it under capped participation levels.
    Sweep(RunArgs),
    /// Finite-difference check of every differentiable component.
    Gradcheck {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run this single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory (overrides out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// noncomm, comm or gnncomm.
    #[arg(long)]
    algo: Option<String>,
    /// mobility or power.
    #[arg(long)]
    task: Option<String>,
    /// bipartite, heterogeneous or hierarchical.
    #[arg(long)]
    structure: Option<String>,
}

enum Failure {
    Config(String),
    Runtime(String),
    Gradcheck,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn config_error(e: Error) -> Failure {
    Failure::Config(e.to_string())
}

fn resolve(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path).map_err(config_error)?.config,
        None => {
            log::info!("no --config given, using defaults");
            ExperimentConfig::default()
        }
    };
    let overrides = [
        ("algo", args.algo.clone()),
        ("task", args.task.clone()),
        ("structure", args.structure.clone()),
        ("seeds", args.seed.map(|s| s.to_string())),
        ("out_dir", args.out.as_ref().map(|p| p.display().to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v).map_err(config_error)?;
        }
    }
    cfg.validate().map_err(config_error)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train(args) => {
            let cfg = resolve(&args)?;
            let outcome = run_experiment(&cfg)?;
            for run in &outcome.runs {
                println!(
                    "seed {}: eval return {:.4}, sum_se {:.4}, ee {:.4e}, msgs/step {:.3}",
                    run.seed, run.eval.return_mean, run.eval.sum_se, run.eval.ee, run.eval.msgs_per_step
                );
            }
            println!("artifacts in {}", outcome.dir.display());
        }
        Command::Eval(args) => {
            let cfg = resolve(&args)?;
            for (seed, e) in evaluate_checkpoints(&cfg)? {
                println!(
                    "seed {seed}: return {:.4}, sum_se {:.4}, ee {:.4e}, msgs/step {:.3}",
                    e.return_mean, e.sum_se, e.ee, e.msgs_per_step
                );
            }
        }
        Command::Sweep(args) => {
            let cfg = resolve(&args)?;
            let table = sweep_collaboration(&cfg)?;
            print!("{}", table.to_csv());
        }
        Command::Gradcheck { seed } => {
            let reports = gradcheck_suite(seed)?;
            let mut ok = true;
            for r in &reports {
                println!(
                    "{:<8} max rel error {:.3e}  {}",
                    r.name,
                    r.max_rel_error,
                    if r.passed { "ok" } else { "FAIL" }
                );
                ok &= r.passed;
            }
            if !ok {
                eprintln!("gradcheck failed (tolerance {GRADCHECK_TOLERANCE:e})");
                return Err(Failure::Gradcheck);
            }
        }
    }
    Ok(())
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Gradcheck => 3,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // bad arguments count as a config error; --help and --version are not errors
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
                Failure::Gradcheck => {}
            }
            ExitCode::from(f.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failures_map_to_distinct_exit_codes() {
        let codes = [
            Failure::Config(String::new()).exit_code(),
            Failure::Runtime(String::new()).exit_code(),
            Failure::Gradcheck.exit_code(),
        ];
        assert_eq!(codes, [1, 2, 3]);
    }
}
