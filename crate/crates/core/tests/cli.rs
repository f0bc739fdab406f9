//! End-to-end runs of the `structacv` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use structacv::cv::Method;
use structacv::io::{read_params, read_report};

const HMM: &str = r#"
[model]
family = "hmm"
states = 2
dim = 1
emission = { kind = "gaussian" }
dirichlet = 2.0

[data.generate]
theta = [0.0, 1.5, -1.5, -1.0, 1.0, 0.0, 0.0]
lengths = [80]
seed = 3

[cv]
scheme = "A"
folds = { kind = "iid", percent = 5, count = 6 }
methods = ["exact", "ij", "ns"]
seed = 2
"#;

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_structacv"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap()
}

fn out_arg(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn fit_writes_parameters_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path(), "fit");
    let o = run(dir.path(), &["fit", "--out", &out, "--threads", "1"], HMM);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let theta = read_params(&dir.path().join("fit/params.csv")).unwrap();
    assert_eq!(theta.len(), 7);
    for f in ["trajectory.csv", "fit.json", "data.csv"] {
        assert!(dir.path().join("fit").join(f).exists(), "{f}");
    }
}

#[test]
fn cv_reports_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path(), "cv");
    let o = run(dir.path(), &["cv", "--out", &out], HMM);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let exact = read_report(&dir.path().join("cv/report_exact.csv")).unwrap();
    let ij = read_report(&dir.path().join("cv/report_ij.csv")).unwrap();
    assert_eq!(exact.method, Method::Exact);
    assert_eq!(exact.outcomes.len(), 6);
    assert_eq!(exact.refits, 6);
    assert_eq!(ij.refits, 0);
    for (e, a) in exact.outcomes.iter().zip(&ij.outcomes) {
        assert_eq!(e.indices, a.indices);
        assert!(e.loss.is_finite() && a.loss.is_finite());
        assert_eq!(a.point_losses.len(), e.indices.len());
    }
    assert!(dir.path().join("cv/comparison_ij.csv").exists());
    assert!(dir.path().join("cv/timings.json").exists());
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let out = out_arg(dir.path(), name);
        let o = run(dir.path(), &["cv", "--out", &out, "--seed", "11"], HMM);
        assert_eq!(o.status.code(), Some(0));
    }
    let mut compared = 0;
    for entry in fs::read_dir(dir.path().join("a")).unwrap() {
        let name = entry.unwrap().file_name();
        if name == "timings.json" {
            continue;
        }
        let a = fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = fs::read(dir.path().join("b").join(&name)).unwrap();
        assert!(a == b, "{name:?} differs");
        compared += 1;
    }
    assert!(compared >= 6);
}

#[test]
fn seed_override_changes_the_data() {
    let dir = tempfile::tempdir().unwrap();
    for (name, seed) in [("a", "1"), ("b", "2")] {
        let out = out_arg(dir.path(), name);
        assert_eq!(run(dir.path(), &["fit", "--out", &out, "--seed", seed], HMM).status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a/data.csv")).unwrap();
    let b = fs::read(dir.path().join("b/data.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_scheme = HMM.replace("scheme = \"A\"", "scheme = \"C\"");
    let unknown_key = HMM.replace("seed = 2", "seed = 2\ncolour = 1");
    let short_theta = HMM.replace("[0.0, 1.5,", "[1.5,");
    let missing_file = HMM.replace("[data.generate]", "[data]\npath = \"absent.csv\"\n[unused]");
    for text in [bad_scheme.as_str(), unknown_key.as_str(), short_theta.as_str(), missing_file.as_str(), "not toml ["] {
        let o = run(dir.path(), &["cv"], text);
        assert_eq!(o.status.code(), Some(2), "{text}");
    }
    let o = run(dir.path(), &["sweep"], HMM);
    assert_eq!(o.status.code(), Some(2), "sweep without an exact report");
    let o = Command::new(env!("CARGO_BIN_EXE_structacv")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = run(dir.path(), &["fit", "--threads", "0"], HMM);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let capped = HMM.replace("[cv]", "[fit]\nmax_iters = 1\n\n[cv]");
    let out = out_arg(dir.path(), "capped");
    let o = run(dir.path(), &["fit", "--out", &out], &capped);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_follows_cv() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path(), "s");
    assert_eq!(run(dir.path(), &["cv", "--out", &out], HMM).status.code(), Some(0));
    let with_sweep = format!("{HMM}\n[sweep]\nstride = 2\nexact_report = \"s/report_exact.csv\"\n");
    let o = run(dir.path(), &["sweep", "--out", &out], &with_sweep);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert!(text.lines().count() > 2);
}
