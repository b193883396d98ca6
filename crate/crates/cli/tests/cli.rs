//! End-to-end checks of the `headsup` binary: exit codes, determinism, and
//! the artifact layout each subcommand leaves behind.

use std::path::Path;
use std::process::{Command, Output};

fn headsup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_headsup"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn sha256(path: &Path) -> u64 {
    // cheap content fingerprint; stable hasher not needed across runs of
    // the same process pair since we compare raw bytes anyway
    let bytes = std::fs::read(path).unwrap();
    let mut h: u64 = 1469598103934665603;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(1099511628211);
    }
    h
}

#[test]
fn taxonomy_build_is_deterministic_and_inspectable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write(&cfg, "schema_version = 1\ndomain = \"piloting\"\n");
    let out1 = dir.path().join("t1");
    let out2 = dir.path().join("t2");
    for out in [&out1, &out2] {
        let r = headsup(&[
            "taxonomy",
            "build",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(
        sha256(&out1.join("taxonomy.jsonl")),
        sha256(&out2.join("taxonomy.jsonl")),
        "stub builds must be byte-identical"
    );
    assert!(out1.join("resolved-config.toml").exists());

    let r = headsup(&[
        "taxonomy",
        "inspect",
        "--db",
        out1.join("taxonomy.jsonl").to_str().unwrap(),
        "--domain",
        "piloting",
        "--topic",
        "shift_left",
        "--k",
        "2",
        "--l",
        "2",
    ]);
    assert!(r.status.success());
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("Shift left."), "{stdout}");

    // a missing cell reports the nearest populated one
    let r = headsup(&[
        "taxonomy",
        "inspect",
        "--db",
        out1.join("taxonomy.jsonl").to_str().unwrap(),
        "--domain",
        "driving",
        "--topic",
        "merge_right",
        "--k",
        "5",
        "--l",
        "4",
    ]);
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(r.status.success());
    assert!(stdout.contains("nearest cell"), "{stdout}");
}

#[test]
fn malformed_config_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    write(&cfg, "schema_version = 1\ndomain = \"piloting\"\nnot_a_key = 3\n");
    let r = headsup(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("not_a_key"), "{err}");
}

#[test]
fn train_eval_demo_roundtrip_smoke() {
    // tiny budget: the pipeline wiring is what is under test here
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write(
        &cfg,
        r#"schema_version = 1
domain = "piloting"
mode = "convey_react"
seeds = [7]
episodes_per_seed = 3

[ppo]
num_updates = 2
num_envs = 2
num_steps = 32
num_minibatches = 2
"#,
    );
    let train_out = dir.path().join("train");
    let r = headsup(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        train_out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let ck = train_out.join("checkpoint-seed7.json");
    assert!(ck.exists());
    assert!(train_out.join("train-seed7.jsonl").exists());
    assert!(train_out.join("resolved-config.toml").exists());

    let eval_out = dir.path().join("eval");
    let r = headsup(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--checkpoint",
        ck.to_str().unwrap(),
        "--out",
        eval_out.to_str().unwrap(),
        "--format",
        "markdown",
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(eval_out.join("metrics.json").exists());
    assert!(eval_out.join("report.md").exists());
    let logs = std::fs::read_dir(&eval_out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("logs-"))
        .count();
    assert_eq!(logs, 1);

    // plot-data rendering from the same checkpoint
    let plot_out = dir.path().join("plot");
    let r = headsup(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--checkpoint",
        ck.to_str().unwrap(),
        "--out",
        plot_out.to_str().unwrap(),
        "--format",
        "plot-data",
    ]);
    assert!(r.status.success());
    let plot = std::fs::read_to_string(plot_out.join("report.csv")).unwrap();
    assert!(plot.starts_with("episode,t,x,y,event"));

    // side-by-side comparison of two checkpoints renders two rows
    let r = headsup(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--checkpoint",
        ck.to_str().unwrap(),
        "--checkpoint",
        ck.to_str().unwrap(),
        "--out",
        dir.path().join("eval2").to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(r.status.success());
    let csv = std::fs::read_to_string(dir.path().join("eval2").join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");

    // re-render stored metrics through the report subcommand
    let r = headsup(&[
        "report",
        "--input",
        eval_out.join("metrics.json").to_str().unwrap(),
        "--format",
        "markdown",
    ]);
    assert!(r.status.success());
    assert!(String::from_utf8_lossy(&r.stdout).contains("| policy |"));
}

#[test]
fn eval_rejects_checkpoint_domain_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let pilot_cfg = dir.path().join("p.toml");
    write(
        &pilot_cfg,
        r#"schema_version = 1
domain = "piloting"
seeds = [3]
episodes_per_seed = 2

[ppo]
num_updates = 1
num_envs = 2
num_steps = 16
num_minibatches = 2
"#,
    );
    let out = dir.path().join("train");
    let r = headsup(&[
        "train",
        "--config",
        pilot_cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let driving_cfg = dir.path().join("d.toml");
    write(
        &driving_cfg,
        "schema_version = 1\ndomain = \"driving\"\nseeds = [3]\nepisodes_per_seed = 2\n",
    );
    let r = headsup(&[
        "eval",
        "--config",
        driving_cfg.to_str().unwrap(),
        "--checkpoint",
        out.join("checkpoint-seed3.json").to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn demo_prints_timeline_and_preempt_variant() {
    let r = headsup(&["demo"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("downward movement began at t=2"), "{stdout}");
    assert!(stdout.contains("mental model complete at t=5"), "{stdout}");

    let r = headsup(&["demo", "--preempt-at", "1"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("preempted at t=1"), "{stdout}");
    assert!(!stdout.contains("downward movement began"), "{stdout}");
}

#[test]
fn sweep_degenerate_grid_runs_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write(
        &cfg,
        r#"schema_version = 1
domain = "piloting"
seeds = [5]
episodes_per_seed = 2

[ppo]
num_updates = 2
num_envs = 2
num_steps = 32
num_minibatches = 2

[sweep]
population_regimes = [[2.0, 0.5]]
dr_grid = [2]
"#,
    );
    let out = dir.path().join("sweep");
    let r = headsup(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(out.join("sweep.json").exists());
    let md = std::fs::read_to_string(out.join("sweep.md")).unwrap();
    assert!(md.contains("matching"), "{md}");

    // resuming reuses the cached cell policies
    let r = headsup(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success());
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("reusing cached policy"), "{err}");
}
