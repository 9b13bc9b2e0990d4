use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &[&str] = &["--spacing", "0.25", "--set", "grid.resolution=0.5", "--set", "grid.margin=3.0"];

fn pamlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pamlab"))
        .args(args)
        .env_remove("PAMLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn run_in(dir: &Path, cmd: &str, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec![cmd, "--out", out];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    pamlab(&args)
}

#[test]
fn identities_pass_and_sabotage_fails() {
    let ok = pamlab(&["identities"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let again = pamlab(&["identities"]);
    assert_eq!(ok.stdout, again.stdout);
    let bad = pamlab(&["identities", "--perturb-kernel"]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stdout).starts_with("FAIL"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&pamlab(&["nonsense"])), 2);
    assert_eq!(code(&pamlab(&["tail", "--no-such-flag"])), 2);
    assert_eq!(code(&pamlab(&["tail", "--set", "grid.step_guard=3"])), 2);
    assert_eq!(code(&pamlab(&["blocking", "--a", "0.5"])), 2);
    let o = pamlab(&["cov", "--set", "not_a_key=1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not_a_key"));
}

#[test]
fn tail_summary_carries_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        "tail",
        &[
            "--replicas",
            "3000",
            "--set",
            "tail.min_replicas=1000",
            "--set",
            "tail.calibration_replicas=200000",
            "--set",
            "tail.calibration_tolerance=0.1",
        ],
    );
    assert!(matches!(code(&o), 0 | 1), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(dir.path());
    assert!((s["results"]["target"].as_f64().unwrap() - 1.3333).abs() < 1e-4);
    let csv = std::fs::read_to_string(dir.path().join("tail.csv")).unwrap();
    assert!(csv.starts_with("theta,count,survival,log_survival,usable\n"));
}

#[test]
fn maxscan_summary_carries_the_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "maxscan", &["--replicas", "6", "--radii", "8,16"]);
    assert!(matches!(code(&o), 0 | 1));
    let b = summary(dir.path())["results"]["bracket"].clone();
    assert!((b[0].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((b[1].as_f64().unwrap() - 0.8255).abs() < 1e-4);
}

#[test]
fn cov_csv_has_oracle_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "cov", &["--replicas", "60"]);
    assert!(matches!(code(&o), 0 | 1));
    let csv = std::fs::read_to_string(dir.path().join("cov.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    for col in ["x", "covariance", "standard_error", "integral_bound"] {
        assert!(header.contains(&col), "{header:?}");
    }
    let xs: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(xs, ["2", "4", "8", "16"]);
}

fn statistics_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            name.ends_with(".csv") || name == "summary.json"
        })
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_and_thread_counts_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--replicas", "40", "--set", "simulate.mean_one_replicas=20"];
    let a = dir.path().join("a");
    run_in(&a, "simulate", &args);
    let first = statistics_files(&a);
    run_in(&a, "simulate", &args);
    assert_eq!(first, statistics_files(&a));

    let b = dir.path().join("b");
    let mut with_threads = args.to_vec();
    with_threads.extend(["--threads", "3"]);
    run_in(&b, "simulate", &with_threads);
    assert_eq!(first, statistics_files(&b));
    assert!(first.iter().any(|(n, _)| n == "snapshot.csv"));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 3);
}

#[test]
fn resume_matches_fresh_run() {
    let dir = tempfile::tempdir().unwrap();
    let part = dir.path().join("part");
    run_in(&part, "gap", &["--replicas", "30", "--checkpoint"]);
    let checkpoint = part.join("partial.json");
    assert!(checkpoint.exists());
    let resumed = dir.path().join("resumed");
    run_in(&resumed, "gap", &["--replicas", "60", "--resume", checkpoint.to_str().unwrap()]);
    let fresh = dir.path().join("fresh");
    run_in(&fresh, "gap", &["--replicas", "60"]);
    assert_eq!(statistics_files(&resumed), statistics_files(&fresh));

    let other = dir.path().join("other");
    let o = run_in(&other, "gap", &["--replicas", "60", "--seed", "9", "--resume", checkpoint.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("hash"));
}

#[test]
fn printed_config_round_trips_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = pamlab(&["blocking", "--beta", "0.05", "--print-config"]);
    assert_eq!(code(&o), 0);
    let path = dir.path().join("c.toml");
    std::fs::write(&path, &o.stdout).unwrap();
    let again = pamlab(&["blocking", "--config", path.to_str().unwrap(), "--print-config"]);
    assert_eq!(o.stdout, again.stdout);
    assert!(String::from_utf8_lossy(&o.stdout).contains("beta = 0.05"));
    let wrong = pamlab(&["tail", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&wrong), 2);
}

#[test]
fn summaries_match_the_documented_schema() {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/docs/summary.schema.json")).unwrap())
            .unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (cmd, extra) in [
        ("simulate", vec!["--replicas", "30", "--set", "simulate.mean_one_replicas=15"]),
        ("gap", vec!["--replicas", "30"]),
        ("blocking", vec!["--replicas", "5", "--set", "blocking.radii=[16.0, 32.0]"]),
    ] {
        let d = dir.path().join(cmd);
        run_in(&d, cmd, &extra);
        let s = summary(&d);
        let errors: Vec<String> = validator.iter_errors(&s).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{cmd}: {errors:?}");
    }
}
