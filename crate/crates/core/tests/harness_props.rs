use std::fs;
use std::path::Path;

use gnncomm::comm::CommMode;
use gnncomm::harness::experiment::{checkpoint_path, GATES_HEADER, METRICS_HEADER, PARTIAL_MARKER};
use gnncomm::harness::gradcheck::registered_components;
use gnncomm::harness::{
    evaluate, evaluate_checkpoints, make_env, parse_config, run_experiment, run_gradcheck, sweep_collaboration,
    sweep_trained, Algo, ExperimentConfig, GradComponent, GradProblem,
};
use gnncomm::env::{ScenarioConfig, Task};
use gnncomm::marl::TrainConfig;
use gnncomm::rng::{purpose, stream, SimRng};
use gnncomm::Error;
use proptest::prelude::*;

fn tiny(out: &Path, algo: Algo) -> ExperimentConfig {
    ExperimentConfig {
        scenario: ScenarioConfig { episode_len: 8, ..Default::default() },
        train: TrainConfig {
            episodes: 5,
            batch_size: 8,
            warmup_steps: 16,
            buffer_capacity: 500,
            critic_hidden: vec![16],
            encoder_hidden: vec![8],
            head_hidden: vec![8],
            embed_dim: 6,
            attn_dim: 4,
            msg_dim: 3,
            integrate_dim: 4,
            ..Default::default()
        },
        algo,
        seeds: vec![1, 2],
        out_dir: out.to_path_buf(),
        eval_episodes: 2,
        trajectory_every: 2,
        ..Default::default()
    }
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn artifacts_have_one_metrics_row_per_seed_episode() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(tmp.path(), Algo::GnnComm);
    run_experiment(&cfg).unwrap();
    let metrics = read(tmp.path(), "metrics.csv");
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines[0], METRICS_HEADER);
    assert_eq!(lines.len(), 1 + cfg.seeds.len() * cfg.train.episodes);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 10));
    assert_eq!(read(tmp.path(), "gates.csv").lines().next(), Some(GATES_HEADER));
    assert_eq!(read(tmp.path(), "eval.csv").lines().count(), 1 + cfg.seeds.len());
    assert!(read(tmp.path(), "trajectories.csv").lines().count() > 1);
    assert!(read(tmp.path(), "run_meta.txt").contains("algo = gnncomm"));
    for &s in &cfg.seeds {
        assert!(checkpoint_path(tmp.path(), s).exists());
    }
    assert!(!tmp.path().join(PARTIAL_MARKER).exists());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&tiny(a.path(), Algo::GnnComm)).unwrap();
    run_experiment(&tiny(b.path(), Algo::GnnComm)).unwrap();
    for name in ["metrics.csv", "gates.csv", "eval.csv", "trajectories.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    assert_eq!(
        fs::read(checkpoint_path(a.path(), 2)).unwrap(),
        fs::read(checkpoint_path(b.path(), 2)).unwrap()
    );
}

#[test]
fn a_seed_does_not_depend_on_its_neighbours() {
    let both = tempfile::tempdir().unwrap();
    let alone = tempfile::tempdir().unwrap();
    let out = run_experiment(&tiny(both.path(), Algo::GnnComm)).unwrap();
    let mut cfg = tiny(alone.path(), Algo::GnnComm);
    cfg.seeds = vec![2];
    let solo = run_experiment(&cfg).unwrap();
    assert_eq!(out.runs[1].metrics, solo.runs[0].metrics);
    assert_eq!(out.runs[1].eval, solo.runs[0].eval);
}

#[test]
fn noncomm_never_opens_a_gate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_experiment(&tiny(tmp.path(), Algo::NonComm)).unwrap();
    for run in &out.runs {
        assert!(run.gates.iter().all(|&(_, p, g)| p == 0.0 && g == 0.0));
        assert!(run.step_msgs.iter().all(|&(m, _)| m == 0));
        assert!(run.metrics.iter().all(|r| r.msgs_per_step == 0.0 && r.comm_prob == 0.0));
    }
}

#[test]
fn fullcomm_sends_on_every_route() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_experiment(&tiny(tmp.path(), Algo::Comm)).unwrap();
    for run in &out.runs {
        assert!(run.step_msgs.iter().all(|&(m, r)| m == r && r > 0));
    }
}

#[test]
fn learned_gates_never_exceed_the_route_count() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_experiment(&tiny(tmp.path(), Algo::GnnComm)).unwrap();
    for run in &out.runs {
        assert!(run.step_msgs.iter().all(|&(m, r)| m <= r));
    }
}

#[test]
fn checkpoints_reproduce_the_training_evaluation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(tmp.path(), Algo::GnnComm);
    let out = run_experiment(&cfg).unwrap();
    let trained = read(tmp.path(), "eval.csv");
    let again = evaluate_checkpoints(&cfg).unwrap();
    for (run, (seed, e)) in out.runs.iter().zip(&again) {
        assert_eq!(run.seed, *seed);
        assert_eq!(run.eval, *e);
    }
    assert_eq!(read(tmp.path(), "eval.csv"), trained);
}

#[test]
fn participation_sweep_brackets_the_learned_gates() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = tiny(tmp.path(), Algo::GnnComm);
    cfg.train.lambda_p = 0.0;
    let mut out = run_experiment(&cfg).unwrap();
    let mut env = make_env(&cfg, &mut stream(cfg.eval_seed, purpose::EVAL)).unwrap();
    let agents = env.n_agents_hint();
    let caps: Vec<usize> = (0..agents + 2).collect();
    let table = sweep_trained(&cfg, &mut out.runs, &mut env, &caps).unwrap();

    assert_eq!(table.notices.len(), 2);
    let rows: Vec<_> = table.caps().collect();
    let same_outcome = |a: &gnncomm::harness::EpisodeSummary, b: &gnncomm::harness::EpisodeSummary| {
        a.return_mean == b.return_mean && a.sum_se == b.sum_se && a.ee == b.ee && a.msgs_per_step == b.msgs_per_step
    };
    assert!(same_outcome(&rows[0].summary, &table.row("noncomm").unwrap().summary));
    for w in rows.windows(2) {
        assert!(w[0].summary.msgs_per_step <= w[1].summary.msgs_per_step);
    }
    // with agents − 1 allowed the cap cannot bind
    let last = rows.last().unwrap();
    assert_eq!(last.n, Some(agents - 1));
    assert_eq!(last.summary, table.row("learned").unwrap().summary);
    let full = table.row("fullcomm").unwrap().summary.msgs_per_step;
    assert!(last.summary.msgs_per_step <= full);
}

trait AgentCount {
    fn n_agents_hint(&self) -> usize;
}

impl<E: gnncomm::marl::MultiAgentEnv> AgentCount for E {
    fn n_agents_hint(&self) -> usize {
        self.n_agents()
    }
}

#[test]
fn eval_with_a_binding_cap_trims_messages_per_receiver() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = tiny(tmp.path(), Algo::GnnComm);
    cfg.seeds = vec![3];
    let mut out = run_experiment(&cfg).unwrap();
    let mut env = make_env(&cfg, &mut stream(cfg.eval_seed, purpose::EVAL)).unwrap();
    let agents = env.n_agents_hint() as f64;
    let t = &mut out.runs[0].trainer;
    let one = evaluate(t, &mut env, cfg.eval_seed, 2, CommMode::Learned, Some(1)).unwrap();
    assert!(one.msgs_per_step <= agents);
    let zero = evaluate(t, &mut env, cfg.eval_seed, 2, CommMode::Learned, Some(0)).unwrap();
    assert_eq!(zero.msgs_per_step, 0.0);
}

#[test]
fn sweep_writes_its_table() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = tiny(tmp.path(), Algo::NonComm);
    cfg.task = Task::Power;
    cfg.seeds = vec![4];
    cfg.sweep_caps = vec![0, 1, 50];
    let table = sweep_collaboration(&cfg).unwrap();
    let text = read(tmp.path(), "sweep.csv");
    assert_eq!(text, table.to_csv());
    assert_eq!(text.lines().count(), 1 + 3 + 3);
    assert!(read(tmp.path(), "sweep_meta.txt").contains("clamped"));
    assert!(read(tmp.path(), "run_meta.txt").contains("algo = gnncomm"));
    assert!(!tmp.path().join(PARTIAL_MARKER).exists());
}

fn sabotaged_gat(rng: &mut SimRng) -> gnncomm::Result<GradProblem> {
    let gat = registered_components().into_iter().find(|c| c.name == "gat").unwrap();
    let mut problem = (gat.build)(rng)?;
    for g in problem.analytic.iter_mut().step_by(3) {
        *g *= 1.5;
    }
    Ok(problem)
}

#[test]
fn gradcheck_names_a_broken_component() {
    let mut comps = registered_components();
    let n = comps.len();
    let i = comps.iter().position(|c| c.name == "gat").unwrap();
    comps[i] = GradComponent { name: "gat", build: sabotaged_gat };
    let reports = run_gradcheck(&comps, 7).unwrap();
    assert_eq!(reports.len(), n);
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    assert_eq!(failed, vec!["gat"]);
}

#[test]
fn config_text_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = tiny(tmp.path(), Algo::Comm);
    cfg.task = Task::Power;
    cfg.train.gamma = 0.9;
    let back = parse_config(&cfg.to_config_text()).unwrap().config;
    assert_eq!(back, cfg);
}

#[test]
fn list_values_take_optional_brackets() {
    let a = parse_config("seeds = [3, 4]\nsweep_caps = []\n").unwrap().config;
    let b = parse_config("seeds = 3,4\nsweep_caps =\n").unwrap().config;
    assert_eq!(a.seeds, vec![3, 4]);
    assert_eq!(a, b);
}

#[test]
fn config_errors_point_at_their_line() {
    let cases = [
        ("seeds = [1]\ngamma = 1.5\n", 2),
        ("# c\n\nno_such_key = 3\n", 3),
        ("tau = 0.1\ntau = 0.2\n", 2),
        ("algo = gnncomm\njust words\n", 2),
        ("episodes = many\n", 1),
        ("seeds = [1, 2\n", 1),
    ];
    for (text, want) in cases {
        match parse_config(text) {
            Err(Error::Config { line, .. }) => assert_eq!(line, want, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

proptest! {
    #[test]
    fn gamma_is_accepted_exactly_on_the_unit_interval(g in -2.0f64..3.0) {
        let ok = parse_config(&format!("gamma = {g}\n")).is_ok();
        prop_assert_eq!(ok, (0.0..1.0).contains(&g));
    }
}
