use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tailgate::config::{parse_config, sidecar_for, Kind};
use tailgate::experiment::{execute, run_spec, Report};
use tailgate::{ExperimentSpec, Rayon};
use tailgate_core::ensemble::Serial;

const SMALL_SWEEP: &str = r#"{
  "dims": 5, "batch": [4, 8, 16], "eta": 0.05,
  "iters": 1500, "tail_window": 200, "k1": 4, "k2": 3, "seed": 7
}"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn tailgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailgate"))
        .args(args)
        .output()
        .expect("spawn tailgate")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn minimal_realizable_spec_fills_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig.json", r#"{"dims": [100], "eta": 0.005, "batch": [4, 64, 512]}"#);
    let spec = parse_config(&cfg).unwrap();
    assert_eq!(spec.name, "fig");
    assert_eq!(spec.kind, Kind::RealizableSweep);
    assert_eq!((spec.k1, spec.k2), (25, 25));
    assert_eq!((spec.iters, spec.tail_window), (8000, 1000));
    assert_eq!(spec.batch, [4, 64, 512]);
    assert_eq!(spec.convergence_gate, Some(1e-5));
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"dims": 10, "eta": 0.01, "batch": 4, "k1": 1}"#, "k1"),
        (r#"{"dims": 10, "eta": 0.01, "batch": [4, 0]}"#, "batch[1]"),
        (r#"{"dims": 10, "eta": 0.01, "batch": 4, "bogus": 1}"#, "bogus"),
        (r#"{"dims": 10, "batch": 4}"#, "eta"),
    ];
    for (text, key) in cases {
        let cfg = write(dir.path(), "bad.json", text);
        let msg = parse_config(&cfg).unwrap_err().to_string();
        assert!(msg.starts_with(key), "{msg}");
    }
}

#[test]
fn step_length_of_dimension_figure_bottom_panel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gdim.json", r#"{"dims": [20, 50, 100], "eta": 0.01, "batch": 32}"#);
    let spec = parse_config(&cfg).unwrap();
    assert_eq!(spec.eta, [0.01]);
    assert_eq!(spec.axis.as_str(), "dim");
}

#[test]
fn sweep_csv_has_one_row_per_point_and_sidecar_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL_SWEEP);
    let mut spec = parse_config(&cfg).unwrap();
    spec.out = dir.path().join("out/small.csv");
    execute(&spec, &Serial).unwrap();

    let csv = fs::read_to_string(&spec.out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "axis,alpha,inv_alpha,k1,k2,max_final_error,eta,batch,dim,variant,seed");
    assert!(lines[1].starts_with("4,") && lines[3].starts_with("16,"));

    let back = parse_config(&sidecar_for(&spec.out)).unwrap();
    assert_eq!(back, spec);
}

#[test]
fn identical_spec_gives_identical_bytes_regardless_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL_SWEEP);
    let spec = parse_config(&cfg).unwrap();
    let mut bytes = Vec::new();
    for (i, threads) in [None, Some(1), Some(3)].into_iter().enumerate() {
        let mut s = spec.clone();
        s.out = dir.path().join(format!("run{i}.csv"));
        execute(&s, &Rayon::with_threads(threads)).unwrap();
        bytes.push(fs::read(&s.out).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(bytes[0], bytes[2]);
}

#[test]
fn every_kind_writes_csv_and_round_tripping_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let specs = [
        r#"{"kind": "validate-estimator", "k1": 10, "k2": 10, "samples": 100, "reps": 2}"#,
        r#"{"kind": "stability-check", "samples": 4000, "groups": [2, 4], "alphas": [1.5]}"#,
        r#"{"kind": "single-run", "dims": 5, "eta": 0.05, "batch": 4, "iters": 300, "tail_window": 50}"#,
        r#"{"kind": "single-run", "task": "mixture", "iters": 300, "tail_window": 50, "eval_samples": 200}"#,
        r#"{"kind": "classification-sweep", "batch": [4, 8], "iters": 400, "tail_window": 100,
            "k1": 3, "k2": 2, "eval_samples": 200, "saturation_gate": null}"#,
    ];
    for (i, text) in specs.iter().enumerate() {
        let cfg = write(dir.path(), &format!("k{i}.json"), text);
        let mut spec = parse_config(&cfg).unwrap();
        spec.out = dir.path().join(format!("k{i}.csv"));
        execute(&spec, &Serial).unwrap();
        let csv = fs::read_to_string(&spec.out).unwrap();
        assert!(csv.lines().count() >= 2, "{text}");
        assert_eq!(parse_config(&sidecar_for(&spec.out)).unwrap(), spec, "{text}");
    }
}

#[test]
fn single_run_trace_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "one.json",
        r#"{"kind": "single-run", "dims": 5, "eta": 0.05, "batch": 4, "iters": 250, "tail_window": 50}"#,
    );
    let spec: ExperimentSpec = parse_config(&cfg).unwrap();
    let Report::SingleRun(out) = run_spec(&spec, &Serial).unwrap() else {
        panic!("expected a single-run report")
    };
    assert_eq!(out.recovery_trace.first().unwrap().t, 1);
    assert_eq!(out.recovery_trace.last().unwrap().t, 250);
    assert!(out.classification_trace.is_empty());
}

#[test]
fn cli_runs_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL_SWEEP);
    let out = dir.path().join("cli.csv");
    let o = tailgate(&["realizable-sweep", "--config", s(&cfg), "--seed", "11", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let spec = parse_config(&sidecar_for(&out)).unwrap();
    assert_eq!(spec.seed, 11);
    assert_eq!(spec.out, out);
}

#[test]
fn cli_ci_scale_sets_block_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.json", r#"{"kind": "validate-estimator", "reps": 1}"#);
    let out = dir.path().join("v.csv");
    let o = tailgate(&["validate-estimator", "--config", s(&cfg), "--out", s(&out), "--ci-scale"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let spec = parse_config(&sidecar_for(&out)).unwrap();
    assert_eq!((spec.k1, spec.k2), (10, 10));
}

#[test]
fn cli_failure_exits_nonzero_and_names_the_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "short.json",
        r#"{"dims": 5, "batch": [4, 8], "eta": 0.05, "iters": 50, "tail_window": 20, "k1": 4, "k2": 3}"#,
    );
    let out = dir.path().join("short.csv");
    let o = tailgate(&["realizable-sweep", "--config", s(&cfg), "--out", s(&out)]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("batch=4"), "{err}");
    assert!(err.contains("run 0"), "{err}");
    assert!(!out.exists());
}

#[test]
fn cli_divergence_names_the_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "hot.json",
        r#"{"dims": 5, "batch": 4, "eta": 50.0, "iters": 500, "tail_window": 20, "k1": 2, "k2": 1}"#,
    );
    let o = tailgate(&["realizable-sweep", "--config", s(&cfg), "--out", s(&dir.path().join("hot.csv"))]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("diverged"), "{err}");
}

#[test]
fn cli_rejects_kind_mismatch_and_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "st.json", r#"{"kind": "stability-check"}"#);
    let o = tailgate(&["realizable-sweep", "--config", s(&cfg)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("stability-check"));

    let cfg = write(dir.path(), "k.json", r#"{"dims": 10, "eta": 0.01, "batch": 4, "k1": 1}"#);
    let o = tailgate(&["realizable-sweep", "--config", s(&cfg)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("k1"));
}
