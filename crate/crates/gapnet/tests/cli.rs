//! End-to-end checks of the command-line interface: exit codes, file
//! outputs, and determinism contracts.

use std::path::Path;
use std::process::{Command, Output};

fn gapnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

#[test]
fn generate_is_deterministic_and_validates_flags() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let common = ["generate", "--seed", "7", "-n", "40", "--t-len", "8", "--onset-day", "3"];

    let out = gapnet(&[&common[..], &["--out", &path_str(&a)]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = gapnet(&[&common[..], &["--out", &path_str(&b)]].concat());
    assert!(out.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    // missing required flag -> usage error
    let out = gapnet(&["generate", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));

    // invariant-violating value -> config error, exit 1
    let out = gapnet(&["generate", "--out", &path_str(&a), "--missing-rate", "1.0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("base_missing_rate"));
}

#[test]
fn impute_produces_fully_observed_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    let filled = dir.path().join("filled.jsonl");
    gapnet(&[
        "generate", "--out", &path_str(&data),
        "--seed", "3", "-n", "20", "--t-len", "6", "--onset-day", "2",
    ]);

    let out = gapnet(&["impute", &path_str(&data), "--method", "locf", "--out", &path_str(&filled)]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&filled).unwrap();
    assert!(!text.contains("null"));

    let set = gapnet::dataset::load_episodes(&filled).unwrap();
    assert!(set.series.iter().all(|s| s.fully_observed()));
}

#[test]
fn train_evaluate_project_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    gapnet(&["generate", "--out", &path_str(&data), "--seed", "11", "-n", "80"]);

    // grud with an imputation method is a configuration error
    let out = gapnet(&[
        "train", &path_str(&data), "--out", &path_str(&dir.path().join("bad")),
        "--cell", "grud", "--impute", "mean", "--epochs", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // ernn without an imputation method likewise
    let out = gapnet(&[
        "train", &path_str(&data), "--out", &path_str(&dir.path().join("bad2")),
        "--cell", "ernn", "--epochs", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));

    let run_dir = dir.path().join("run");
    let out = gapnet(&[
        "train", &path_str(&data), "--out", &path_str(&run_dir),
        "--cell", "gru", "--impute", "mean", "--epochs", "8",
        "--hidden", "6", "--batch-size", "16", "--restarts", "2", "--seed", "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run_dir.join("config.json").is_file());
    assert!(run_dir.join("summary.json").is_file());
    for r in 0..2 {
        let sub = run_dir.join(format!("restart_{r:02}"));
        assert!(sub.join("checkpoint.json").is_file());
        assert!(sub.join("history.csv").is_file());
    }

    // checkpoint F1 equals the history maximum
    let ck =
        gapnet::checkpoint::Checkpoint::load(run_dir.join("restart_00/checkpoint.json")).unwrap();
    let text = std::fs::read_to_string(run_dir.join("restart_00/history.csv")).unwrap();
    let max_f1 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .fold(f64::MIN, f64::max);
    assert_eq!(ck.best_val_f1, Some(max_f1));

    // evaluating a run directory aggregates restarts and is byte-stable
    let eval_a = dir.path().join("eval_a");
    let out = gapnet(&[
        "evaluate", &path_str(&data), "--checkpoint", &path_str(&run_dir),
        "--split", "test", "--out", &path_str(&eval_a),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains('\u{b1}'), "aggregate table shows mean \u{b1} se: {stdout}");
    let report_a = std::fs::read(eval_a.join("restart_00/report.json")).unwrap();
    let report_json: serde_json::Value = serde_json::from_slice(&report_a).unwrap();
    for key in ["f1", "auc", "confusion"] {
        assert!(report_json.get(key).is_some(), "report field {key}");
    }
    assert!(eval_a.join("restart_00/roc.csv").is_file());
    assert!(eval_a.join("restart_00/pca.csv").is_file());
    assert!(eval_a.join("summary.json").is_file());

    let eval_b = dir.path().join("eval_b");
    gapnet(&[
        "evaluate", &path_str(&data), "--checkpoint", &path_str(&run_dir),
        "--split", "test", "--out", &path_str(&eval_b),
    ]);
    let report_b = std::fs::read(eval_b.join("restart_00/report.json")).unwrap();
    assert_eq!(report_a, report_b);

    // projection writes plot-ready coordinates
    let proj = dir.path().join("proj");
    let out = gapnet(&[
        "project", &path_str(&data),
        "--checkpoint", &path_str(&run_dir.join("restart_00/checkpoint.json")),
        "--split", "test", "--out", &path_str(&proj),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pca = std::fs::read_to_string(proj.join("pca.csv")).unwrap();
    assert!(pca.starts_with("x,y,label\n"));
    assert!(pca.lines().count() > 10);
}

#[test]
fn evaluate_rejects_mismatched_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    gapnet(&["generate", "--out", &path_str(&data), "--seed", "2", "-n", "60", "--vars", "4"]);
    let run_dir = dir.path().join("run");
    let out = gapnet(&[
        "train", &path_str(&data), "--out", &path_str(&run_dir),
        "--cell", "grud", "--epochs", "2", "--hidden", "5", "--seed", "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let other = dir.path().join("other.jsonl");
    gapnet(&["generate", "--out", &path_str(&other), "--seed", "2", "-n", "60", "--vars", "6"]);
    let out = gapnet(&[
        "evaluate", &path_str(&other), "--checkpoint", &path_str(&run_dir),
        "--split", "test", "--out", &path_str(&dir.path().join("e")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains('4') && err.contains('6'), "names both shapes: {err}");
}

#[test]
fn malformed_dataset_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.jsonl");
    std::fs::write(
        &data,
        "{\"variables\":[\"v\"],\"t_len\":1}\n{\"id\":\"a\",\"label\":0,\"timestamps\":[0],\"values\":[[1.0]]}\nnot json\n",
    )
    .unwrap();
    let out = gapnet(&[
        "train", &path_str(&data), "--out", &path_str(&dir.path().join("x")),
        "--cell", "grud", "--epochs", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("gen.json");
    std::fs::write(&cfg_path, r#"{"n_series": 24, "t_len": 5, "onset_day": 2, "seed": 9}"#)
        .unwrap();
    let out_a = dir.path().join("a.jsonl");
    let out = gapnet(&["generate", "--config", &path_str(&cfg_path), "--out", &path_str(&out_a)]);
    assert!(out.status.success());
    let set = gapnet::dataset::load_episodes(&out_a).unwrap();
    assert_eq!((set.len(), set.t_len()), (24, 5));

    // the flag wins over the file
    let out_b = dir.path().join("b.jsonl");
    let out = gapnet(&[
        "generate", "--config", &path_str(&cfg_path), "-n", "10", "--out", &path_str(&out_b),
    ]);
    assert!(out.status.success());
    assert_eq!(gapnet::dataset::load_episodes(&out_b).unwrap().len(), 10);
}
