use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pwarx_cli::csv_io::load_csv;
use pwarx_cli::model_file::load_model;

fn pwarx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwarx"))
        .args(args)
        .env_remove("PWARX_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_dataset_and_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    ok(&pwarx(&["generate", "--T", "300", "--seed", "1", "--out-dir", s(&out)]));
    let data = load_csv(&out.join("data.csv")).unwrap();
    assert_eq!(data.len(), 300);
    let modes = fs::read_to_string(out.join("modes.csv")).unwrap();
    assert_eq!(modes.lines().count(), 300);
    assert!(modes.lines().skip(1).all(|l| matches!(l.split(',').nth(1), Some("1" | "2" | "3"))));
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&pwarx(&["generate", "--samples", "200", "--seed", "9", "--out-dir", s(&a)]));
    ok(&pwarx(&["generate", "--samples", "200", "--seed", "9", "--out-dir", s(&b)]));
    assert_eq!(fs::read(a.join("data.csv")).unwrap(), fs::read(b.join("data.csv")).unwrap());
}

#[test]
fn fit_then_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&pwarx(&["generate", "--T", "600", "--seed", "3", "--out-dir", s(&d.join("train"))]));
    ok(&pwarx(&["generate", "--T", "200", "--seed", "4", "--out-dir", s(&d.join("val"))]));
    let train = d.join("train/data.csv");
    let stdout = ok(&pwarx(&[
        "fit", "--data", s(&train), "--k", "3", "--restarts", "3", "--out-dir", s(&d.join("fit")),
    ]));
    assert!(stdout.contains("objective"), "{stdout}");
    let model = load_model(&d.join("fit/model.txt")).unwrap();
    assert_eq!((model.num_modes(), model.n_a(), model.n_b()), (3, 1, 1));
    let trace = fs::read_to_string(d.join("fit/fit-trace.jsonl")).unwrap();
    assert!(trace.lines().count() >= 3);
    for line in trace.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["objective"].is_f64());
    }

    let stdout = ok(&pwarx(&[
        "simulate",
        "--model",
        s(&d.join("fit/model.txt")),
        "--data",
        s(&d.join("val/data.csv")),
        "--out-dir",
        s(&d.join("sim")),
    ]));
    assert!(stdout.contains("BFR = "), "{stdout}");
    let pred = fs::read_to_string(d.join("sim/predictions.csv")).unwrap();
    assert_eq!(pred.lines().next(), Some("t,y,y_hat"));
    assert_eq!(pred.lines().count(), 200);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("env-out");
    let out = Command::new(env!("CARGO_BIN_EXE_pwarx"))
        .args(["generate", "--T", "50"])
        .env("PWARX_OUT_DIR", &target)
        .output()
        .unwrap();
    ok(&out);
    assert!(target.join("data.csv").exists());
}

#[test]
fn config_file_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&pwarx(&["generate", "--T", "300", "--out-dir", s(d)]));
    let cfg = d.join("c.toml");
    fs::write(&cfg, "restarts = 2\nk_max = 4\n").unwrap();
    let stdout = ok(&pwarx(&[
        "select-k",
        "--config",
        s(&cfg),
        "--data",
        s(&d.join("data.csv")),
        "--out-dir",
        s(&d.join("sk")),
    ]));
    assert!(stdout.contains("selected K = "), "{stdout}");
    let first = fs::read_to_string(d.join("sk/select-k-trace.jsonl")).unwrap();
    let v: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert_eq!(v["k_in"], 4);
}

#[test]
fn small_montecarlo() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc");
    let stdout = ok(&pwarx(&[
        "montecarlo", "--task", "select-k", "--runs", "2", "--T", "400", "--restarts", "2", "--k-max", "4",
        "--out-dir", s(&out),
    ]));
    assert!(stdout.contains("runs with K = 3"), "{stdout}");
    for f in ["runs.jsonl", "parameters.csv", "boundaries.csv", "histogram.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read_to_string(out.join("runs.jsonl")).unwrap().lines().count(), 2);
    let params = fs::read_to_string(out.join("parameters.csv")).unwrap();
    assert_eq!(params.lines().next(), Some("mode,coefficient,true,mean,std,count"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |out: Output| out.status.code().unwrap();

    // clap usage error
    assert_eq!(code(pwarx(&["fit"])), 2);
    // rejected hyper-parameter
    assert_eq!(code(pwarx(&["generate", "--out-dir", s(d)])), 0);
    let data = d.join("data.csv");
    assert_eq!(code(pwarx(&["select-k", "--data", s(&data), "--rho=-1"])), 2);
    let cfg = d.join("bad.toml");
    fs::write(&cfg, "mu = 1.5\n").unwrap();
    assert_eq!(code(pwarx(&["select-k", "--config", s(&cfg), "--data", s(&data)])), 2);

    let bad = d.join("bad.csv");
    fs::write(&bad, "t,u,y\n0,1,2\n1,oops,3\n").unwrap();
    assert_eq!(code(pwarx(&["fit", "--data", s(&bad), "--k", "2", "--out-dir", s(d)])), 3);
    fs::write(&bad, "t,u,y\n0,1,2\n5,1,3\n").unwrap();
    assert_eq!(code(pwarx(&["fit", "--data", s(&bad), "--k", "2", "--out-dir", s(d)])), 3);

    let model = d.join("model.txt");
    fs::write(&model, "format = something-else\n").unwrap();
    assert_eq!(
        code(pwarx(&["simulate", "--model", s(&model), "--data", s(&data), "--out-dir", s(d)])),
        4
    );

    assert_eq!(code(pwarx(&["fit", "--data", s(&d.join("missing.csv")), "--k", "2"])), 5);

    let short = d.join("short.csv");
    fs::write(&short, "t,u,y\n0,1,2\n").unwrap();
    assert_eq!(code(pwarx(&["fit", "--data", s(&short), "--k", "2", "--out-dir", s(d)])), 6);
}
