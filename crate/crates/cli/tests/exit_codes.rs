use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gnncomm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnncomm"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const TINY: &str = "\
episodes = 2
episode_len = 5
warmup_steps = 8
batch_size = 4
critic_hidden = [8]
encoder_hidden = [4]
head_hidden = [4]
embed_dim = 4
attn_dim = 3
msg_dim = 2
integrate_dim = 3
eval_episodes = 1
sweep_caps = [0, 1]
";

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, format!("{TINY}out_dir = {}\n{extra}", dir.join("out").display())).unwrap();
    path.display().to_string()
}

#[test]
fn gradcheck_passes_with_exit_zero() {
    let out = gnncomm(&["gradcheck", "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["dense", "gcn", "sage", "gat", "actor", "critic"] {
        assert!(text.contains(name), "{name} missing from {text}");
    }
}

#[test]
fn train_then_eval_then_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let train = gnncomm(&["train", "--config", &cfg, "--seed", "5"]);
    assert_eq!(code(&train), 0, "{}", String::from_utf8_lossy(&train.stderr));
    let out = tmp.path().join("out");
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    assert!(out.join("checkpoints/seed-5.params").exists());

    let eval = gnncomm(&["eval", "--config", &cfg, "--seed", "5"]);
    assert_eq!(code(&eval), 0, "{}", String::from_utf8_lossy(&eval.stderr));

    let sweep = gnncomm(&["sweep", "--config", &cfg, "--seed", "5", "--task", "power"]);
    assert_eq!(code(&sweep), 0, "{}", String::from_utf8_lossy(&sweep.stderr));
    assert!(String::from_utf8_lossy(&sweep.stdout).starts_with("setting,n,"));
    assert!(out.join("sweep.csv").exists());
}

#[test]
fn config_errors_exit_one_with_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "gamma = 1.5\n");
    let out = gnncomm(&["train", "--config", &cfg]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 15"), "{err}");
    assert!(!tmp.path().join("out").exists());

    let cfg = write_config(tmp.path(), "colour = blue\n");
    assert_eq!(code(&gnncomm(&["train", "--config", &cfg])), 1);
    assert_eq!(code(&gnncomm(&["train", "--config", &cfg.replace("run.cfg", "missing.cfg")])), 1);
    assert_eq!(code(&gnncomm(&["train", "--algo", "telepathy"])), 1);
    assert_eq!(code(&gnncomm(&["train", "--no-such-flag"])), 1);
}

#[test]
fn runtime_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    // no checkpoint has been written yet
    let out = gnncomm(&["eval", "--config", &cfg, "--seed", "9"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}
