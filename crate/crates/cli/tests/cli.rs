use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fnmf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fnmf"))
        .args(args)
        .current_dir(cwd)
        .env("FNMF_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

const QUICK: &[&str] = &[
    "--repeats",
    "2",
    "--max-iters",
    "8",
    "--kmeans-restarts",
    "2",
];

fn with_quick<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().chain(QUICK).copied().collect()
}

#[test]
fn synth_writes_labelled_csv() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fnmf(
        &["synth", "--seed", "3", "--out", "toy.csv"],
        dir.path(),
    ));
    let text = fs::read_to_string(dir.path().join("toy.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "f0,f1,f2,f3,f4,f5,f6,label");
    assert_eq!(lines.len(), 901);
    assert!(lines[1].ends_with(",0") && lines[900].ends_with(",2"));
}

#[test]
fn run_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        ok(&fnmf(
            &with_quick(&["run", "--data", "synthetic:2", "--out", out]),
            dir.path(),
        ));
    }
    let a = fs::read(dir.path().join("a/result.json")).unwrap();
    let b = fs::read(dir.path().join("b/result.json")).unwrap();
    assert_eq!(a, b);

    let record: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(record["method"], "fnmf");
    assert_eq!(record["repeats"].as_array().unwrap().len(), 2);
    for key in [
        "acc_mean",
        "acc_std",
        "nmi_mean",
        "nmi_std",
        "mean_iterations",
        "config",
    ] {
        assert!(record.get(key).is_some(), "missing {key}");
    }
    let timing: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a/timing.json")).unwrap()).unwrap();
    assert!(timing["wall_time_secs"].as_f64().unwrap() >= 0.0);

    let curve = fs::read_to_string(dir.path().join("a/curves/repeat_000.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("iteration,objective"));
    assert_eq!(curve.lines().count(), 9);
}

#[test]
fn csv_input_matches_synthetic_source() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fnmf(
        &["synth", "--seed", "4", "--out", "toy.csv"],
        dir.path(),
    ));
    ok(&fnmf(
        &with_quick(&[
            "run", "--data", "toy.csv", "--header", "--method", "nmf", "--out", "csv",
        ]),
        dir.path(),
    ));
    ok(&fnmf(
        &with_quick(&[
            "run",
            "--data",
            "synthetic:4",
            "--method",
            "nmf",
            "--out",
            "syn",
        ]),
        dir.path(),
    ));
    let read = |p: &str| -> serde_json::Value {
        serde_json::from_slice(&fs::read(dir.path().join(p)).unwrap()).unwrap()
    };
    let (a, b) = (read("csv/result.json"), read("syn/result.json"));
    assert_eq!(a["method"], "nmf");
    // CSV text round-trips f64 exactly, so the scores agree.
    assert_eq!(a["repeats"], b["repeats"]);
}

#[test]
fn grid_and_sweep_tables() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fnmf(
        &with_quick(&[
            "grid",
            "--data",
            "synthetic",
            "--lambdas",
            "0.1,1",
            "--betas",
            "1,10,100",
            "--out",
            "g",
        ]),
        dir.path(),
    ));
    let grid = fs::read_to_string(dir.path().join("g/grid.csv")).unwrap();
    assert_eq!(
        grid.lines().next(),
        Some("lambda,beta,acc_mean,acc_std,nmi_mean,nmi_std")
    );
    assert_eq!(grid.lines().count(), 7);
    assert!(dir.path().join("g/result.json").exists());

    ok(&fnmf(
        &with_quick(&[
            "sweep-m",
            "--data",
            "synthetic",
            "--m-values",
            "1,2",
            "--out",
            "s",
        ]),
        dir.path(),
    ));
    let sweep = fs::read_to_string(dir.path().join("s/sweep_m.csv")).unwrap();
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], "m,acc_mean,acc_std,nmi_mean,nmi_std");
    assert!(lines[1].starts_with("1,") && lines[2].starts_with("2,"));
    assert!(dir.path().join("s/m_2/result.json").exists());
}

#[test]
fn noise_adds_features() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fnmf(
        &with_quick(&[
            "noise",
            "--data",
            "synthetic",
            "--noise-dims",
            "4",
            "--out",
            "n",
        ]),
        dir.path(),
    ));
    let noise: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("n/noise.json")).unwrap()).unwrap();
    assert_eq!(noise[0]["kind"], "dims");
    assert_eq!(noise[0]["count"], 4);

    let out = fnmf(
        &with_quick(&["noise", "--data", "synthetic", "--out", "m"]),
        dir.path(),
    );
    assert!(!out.status.success());
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = fnmf(&["run", "--data", "missing.csv", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    let out = fnmf(
        &["run", "--data", "synthetic", "--repeats", "0", "--out", "x"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));

    let out = fnmf(
        &[
            "run",
            "--data",
            "synthetic",
            "--label-column",
            "left",
            "--out",
            "x",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    fs::write(dir.path().join("bad.csv"), "1,2,0\n3,oops,1\n").unwrap();
    let out = fnmf(&["run", "--data", "bad.csv", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 2") && err.contains("column 2"), "{err}");
}
