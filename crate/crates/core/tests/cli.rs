use std::path::Path;
use std::process::{Command, Output};

fn mapsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapsim"))
        .current_dir(dir)
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn deploy_then_dump_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let out = mapsim(dir.path(), &["--out", "run", "deploy", "--monte-carlo", "4", "--episodes", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for file in ["plan.json", "constraints.json", "smallscale.resolved.toml"] {
        assert!(dir.path().join("run").join(file).is_file(), "missing {file}");
    }

    let out = mapsim(dir.path(), &["--out", "run", "link-budget-dump", "--deployment", "run/plan.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("run/link_budget.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 16);
    assert!(csv.lines().count() > 10);

    let out = mapsim(
        dir.path(),
        &[
            "--out",
            "run",
            "evaluate",
            "--deployment",
            "run/plan.json",
            "--baseline",
            "max-snr",
            "--episodes",
            "2",
            "--length",
            "3",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/evaluation_max-snr.json")).unwrap())
            .unwrap();
    assert_eq!(report["method"], "max-snr");
    assert_eq!(report["episodes"].as_array().unwrap().len(), 2);
}

#[test]
fn train_writes_a_loadable_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.toml"), "episodes = 2\nepisode_length = 4\n").unwrap();
    let out = mapsim(dir.path(), &["--out", "run", "link-budget-dump", "--locations", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = mapsim(dir.path(), &["--out", "run", "deploy", "--monte-carlo", "3", "--episodes", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = mapsim(dir.path(), &["--out", "run", "train", "--deployment", "run/plan.json", "--config", "cfg.toml"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let policy = mapsim_core::marl::PolicyModel::load(&dir.path().join("run/policy.json")).unwrap();
    assert!(policy.is_finite());
    let curve = std::fs::read_to_string(dir.path().join("run/learning_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);
}

#[test]
fn infeasible_search_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = mapsim(
        dir.path(),
        &["--scenario", "mediumscale", "--out", "run", "deploy", "--method", "random", "--episodes", "1"],
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(dir.path().join("run/plan.json").is_file());
}

#[test]
fn errors_exit_with_one_and_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = mapsim(dir.path(), &["--scenario", "largescale", "deploy"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("largescale"));

    std::fs::write(dir.path().join("bad.toml"), "name = \"x\"\n[area]\nwidth_m = \"wide\"\n").unwrap();
    let out = mapsim(dir.path(), &["--scenario", "bad.toml", "deploy"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!stderr(&out).is_empty());

    let out = mapsim(dir.path(), &["evaluate", "--deployment", "missing.json", "--baseline", "max-snr"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("missing.json"));

    let out = mapsim(dir.path(), &["fig5", "--policy-dir", "nowhere", "--uavs", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("1-MAP sweep point"), "{}", stderr(&out));
}

#[test]
fn bad_arguments_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = mapsim(dir.path(), &["evaluate", "--deployment", "p.json"]);
    assert_ne!(out.status.code(), Some(0));
    let out = mapsim(dir.path(), &["fig6", "--densities", "0.003,0.001"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("increasing"));
}
