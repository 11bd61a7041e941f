use std::path::Path;
use std::process::{Command, Output};

use dp_erm::model_io::read_model;

fn dp_erm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dp-erm"))
        .args(args)
        .env_remove("DP_ERM_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("sweep.cfg");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const MINIMAL: &str = "datasets = synthetic:kind=ridge:n=80:d=3\nmus = 0.1\nepsilons = 1\nmethods = opgd, baseline\ntrials = 2\n";

#[test]
fn help_lists_every_flag() {
    let expected: &[(&str, &[&str])] = &[
        ("bench", &["--config", "--out", "--seed", "--trials", "--epsilons", "--mus", "--delta", "--methods", "--batch-size", "--set", "--no-runtime"]),
        ("train", &["--data", "--synthetic", "--label", "--task", "--categorical", "--method", "--epsilon", "--delta", "--mu", "--loss", "--d-bound", "--batch-size", "--seed", "--out"]),
        ("sensitivity-check", &["--pairs", "--n", "--d", "--mu", "--T", "--loss", "--seed", "--out"]),
        ("mechanism-check", &["--samples", "--d", "--sigma", "--rel-tol", "--seed"]),
    ];
    for (sub, flags) in expected {
        let out = dp_erm(&[sub, "--help"]);
        assert_eq!(code(&out), 0);
        let text = String::from_utf8_lossy(&out.stdout);
        for f in *flags {
            assert!(text.contains(f), "{sub} --help lacks {f}");
        }
    }
    assert_eq!(code(&dp_erm(&["--help"])), 0);
}

#[test]
fn unknown_flags_are_usage_errors() {
    assert_eq!(code(&dp_erm(&["train", "--bogus"])), 1);
    assert_eq!(code(&dp_erm(&["nope"])), 1);
}

#[test]
fn bench_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let out_dir = dir.path().join("out");
    let out = dp_erm(&["bench", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(out_dir.join("results.txt").exists());
}

#[test]
fn bench_reports_config_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "datasets = synthetic:kind=ridge:n=80:d=3\n# fine\ntrials three\n");
    let out = dp_erm(&["bench", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn bench_is_byte_stable_without_runtimes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = dp_erm(&["bench", "--config", &cfg, "--seed", "7", "--no-runtime", "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
        std::fs::read(out_dir.join("results.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn seed_comes_from_environment_unless_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let run = |sub: &str, env: Option<&str>, flag: Option<&str>| {
        let out_dir = dir.path().join(sub);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_dp-erm"));
        cmd.args(["bench", "--config", &cfg, "--no-runtime", "--out", out_dir.to_str().unwrap()]);
        cmd.env_remove("DP_ERM_SEED");
        if let Some(e) = env {
            cmd.env("DP_ERM_SEED", e);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.status().unwrap().success());
        std::fs::read(out_dir.join("results.csv")).unwrap()
    };
    let env5 = run("e5", Some("5"), None);
    let flag5 = run("f5", None, Some("5"));
    let env_overridden = run("o", Some("6"), Some("5"));
    let env6 = run("e6", Some("6"), None);
    assert_eq!(env5, flag5);
    assert_eq!(env5, env_overridden);
    assert_ne!(env5, env6);
}

#[test]
fn partial_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "datasets = synthetic:kind=ridge:n=80:d=3, csv:path=/missing.csv:label=y\nmus = 0.1\nepsilons = 1\nmethods = opgd\ntrials = 2\n",
    );
    let out = dp_erm(&["bench", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn train_opgd_pure_writes_gamma_laplace_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.csv");
    let out = dp_erm(&[
        "train", "--synthetic", "kind=ridge:n=300:d=4", "--method", "opgd", "--epsilon", "1", "--delta", "0",
        "--mu", "0.1", "--loss", "huber", "--seed", "3", "--out", model.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&model).unwrap();
    assert!(text.contains("# noise: gamma-laplace"));
    let (prov, w) = read_model(text.as_bytes()).unwrap();
    assert_eq!(prov.algorithm, dp_erm::Algorithm::Opgd);
    assert_eq!(prov.epsilon, Some(1.0));
    assert_eq!(prov.delta, Some(0.0));
    assert_eq!(prov.seed, 3);
    assert_eq!(w.len(), 4);
}

#[test]
fn train_from_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let mut body = String::from("a,b,color,label\n");
    for i in 0..60 {
        let a = (i as f64 * 0.37).sin();
        let b = (i as f64 * 0.11).cos();
        let color = ["red", "green", "blue"][i % 3];
        let label = if a + b > 0.5 { "yes" } else { "no" };
        body.push_str(&format!("{a},{b},{color},{label}\n"));
    }
    std::fs::write(&data, body).unwrap();
    let model = dir.path().join("m.csv");
    let out = dp_erm(&[
        "train", "--data", data.to_str().unwrap(), "--label", "label", "--categorical", "color", "--method",
        "baseline", "--epsilon", "1", "--delta", "0.001", "--mu", "0.1", "--batch-size", "10", "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (prov, w) = read_model(std::fs::read(&model).unwrap().as_slice()).unwrap();
    assert_eq!(prov.algorithm, dp_erm::Algorithm::Baseline);
    assert_eq!(w.len(), 5);
}

#[test]
fn rrpsgd_without_delta_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.csv");
    let out = dp_erm(&[
        "train", "--synthetic", "kind=ridge:n=100:d=3", "--method", "rrpsgd", "--epsilon", "1", "--delta", "0",
        "--out", model.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta > 0"));
    assert!(!model.exists());
}

#[test]
fn sensitivity_check_defaults_hold() {
    let convex = dp_erm(&["sensitivity-check"]);
    assert_eq!(code(&convex), 0);
    let text = String::from_utf8_lossy(&convex.stdout);
    assert_eq!(text.lines().count(), 101);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
    assert_eq!(code(&dp_erm(&["sensitivity-check", "--mu", "0.1"])), 0);
    assert_eq!(code(&dp_erm(&["sensitivity-check", "--pairs", "0"])), 1);
}

#[test]
fn mechanism_check_moments() {
    let out = dp_erm(&["mechanism-check", "--d", "2", "--sigma", "1", "--samples", "1000000"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("expected=6 "));
    assert!(text.contains("expected=2 "));
    let out = dp_erm(&["mechanism-check", "--d", "1", "--sigma", "2", "--samples", "200000"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("expected=8 ") && text.contains("expected=4 "));
    assert_eq!(code(&dp_erm(&["mechanism-check", "--rel-tol", "1e-9", "--samples", "10000"])), 3);
}
