use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn nevlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nevlab")).args(args).output().expect("spawn nevlab")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

fn verify_manifest(dir: &Path) -> Value {
    let m = json(&dir.join("manifest.json"));
    let files = m["files"].as_object().unwrap();
    assert!(!files.is_empty());
    for (name, sum) in files {
        let bytes = std::fs::read(dir.join(name)).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), sum.as_str().unwrap(), "{name}");
    }
    m
}

#[test]
fn lambda_at_i_and_periodicity() {
    let o = nevlab(&["lambda", "--tau", "0,1", "--tau", "2,1"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("re,im,lam_re,lam_im,rho\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][..2], &[0.0, 1.0]);
    assert!((rows[0][2] - 0.5).abs() < 1e-12 && rows[0][3].abs() < 1e-12);
    for k in 2..5 {
        assert!((rows[0][k] - rows[1][k]).abs() < 1e-12);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(code(&nevlab(&["lambda", "--tau", "0,-1"])), 3);
    assert_eq!(code(&nevlab(&["lambda", "--tau", "zero,one"])), 2);
    assert_eq!(code(&nevlab(&["lambda", "--no-such-flag"])), 2);
    assert_eq!(code(&nevlab(&["lambda"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    assert_eq!(code(&nevlab(&["profile", "--profile", "exp(-", "--out", out.to_str().unwrap()])), 2);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|n| {
            let out = dir.path().join(n);
            let o = nevlab(&["lambda", "--grid", "-1,1,5,0.5,2,4", "--out", out.to_str().unwrap()]);
            assert_eq!(code(&o), 0);
            verify_manifest(&out);
            out
        })
        .collect();
    let a = std::fs::read(runs[0].join("lambda.csv")).unwrap();
    let b = std::fs::read(runs[1].join("lambda.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(csv_rows(&String::from_utf8(a).unwrap()).len(), 20);
    assert_eq!(json(&runs[0].join("manifest.json"))["files"], json(&runs[1].join("manifest.json"))["files"]);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 9, "params": {"tau": [[0.0, 2.0]]}}"#).unwrap();
    let o = nevlab(&["--config", cfg.to_str().unwrap(), "lambda"]);
    assert_eq!(code(&o), 0);
    assert_eq!(&csv_rows(&stdout(&o))[0][..2], &[0.0, 2.0]);
    let o = nevlab(&["--config", cfg.to_str().unwrap(), "lambda", "--tau", "0,1"]);
    assert_eq!(&csv_rows(&stdout(&o))[0][..2], &[0.0, 1.0]);

    // a manifest replays its own run
    let first = dir.path().join("first");
    assert_eq!(code(&nevlab(&["--config", cfg.to_str().unwrap(), "lambda", "--out", first.to_str().unwrap()])), 0);
    let m = verify_manifest(&first);
    assert_eq!(m["config"]["seed"], 9);
    let second = dir.path().join("second");
    let replay = nevlab(&["--config", first.join("manifest.json").to_str().unwrap(), "lambda", "--out", second.to_str().unwrap()]);
    assert_eq!(code(&replay), 0);
    assert_eq!(std::fs::read(first.join("lambda.csv")).unwrap(), std::fs::read(second.join("lambda.csv")).unwrap());

    std::fs::write(&cfg, r#"{"params": {"no_such_key": 1}}"#).unwrap();
    assert_eq!(code(&nevlab(&["--config", cfg.to_str().unwrap(), "lambda", "--tau", "0,1"])), 2);
    std::fs::write(&cfg, r#"{"command": "lemmac"}"#).unwrap();
    assert_eq!(code(&nevlab(&["--config", cfg.to_str().unwrap(), "lambda", "--tau", "0,1"])), 2);
}

#[test]
fn profile_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let o = nevlab(&["profile", "--profile", "exp(-sqrt(abs(x)))", "--tame", "minorant", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("log integral: convergent"));
    verify_manifest(&out);
    let r = json(&out.join("report.json"));
    assert_eq!(r["tameness"]["is_tame"], true);
    assert!(out.join("profile.plt").exists() && out.join("profile.dat").exists());
}

#[test]
fn char_of_exp_minus_iz() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let o = nevlab(&["char", "--r-grid", "4,16,64", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = std::fs::read_to_string(out.join("char.csv")).unwrap();
    assert!(text.starts_with("r,A,B,C,S,So,err\n"));
    for row in csv_rows(&text) {
        assert!((row[2] - 1.0).abs() < 1e-4, "{row:?}");
    }
    verify_manifest(&out);
}

#[test]
fn lemmac_scan_and_tolerance_stability() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = nevlab(&["lemmac", "--out", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("c_hat: "));
    let s = json(&a.join("summary.json"));
    assert!(s["c_hat"].as_f64().unwrap() > 0.0);
    let ra = csv_rows(&std::fs::read_to_string(a.join("lemmac.csv")).unwrap());
    assert_eq!(ra.len(), 9);
    assert!(ra.iter().all(|r| r[3] > 0.0));

    let doubled = format!("{}", 2.0 * nevlab::lattice::LEMMA_C_TOL);
    assert_eq!(code(&nevlab(&["lemmac", "--tol", &doubled, "--out", b.to_str().unwrap()])), 0);
    let rb = csv_rows(&std::fs::read_to_string(b.join("lemmac.csv")).unwrap());
    for (x, y) in ra.iter().zip(&rb) {
        assert!((x[1] / y[1] - 1.0).abs() < 0.01);
    }
    assert_eq!(code(&nevlab(&["lemmac", "--y-min", "1e-7"])), 3);
}

#[test]
fn map_diag_translation_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let o = nevlab(&["map-diag", "--profile", "0.5", "--tame", "none", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let d = json(&out.join("diag.json"));
    assert!(d["translation"].as_f64().unwrap() < 1e-6);
    assert!(d["round_trip"].as_f64().unwrap() < 1e-6);
    verify_manifest(&out);
}

#[test]
fn map_diag_claims_on_root_minorant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let o = nevlab(&["map-diag", "--profile", "exp(-sqrt(abs(x)))", "--tame", "minorant", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("ok   boundary monotonicity"));
    assert!(text.contains("ok   graph bound"));
}

#[test]
fn map_diag_coarse_nodes_warn() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let o = nevlab(&["map-diag", "--nodes", "64", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let d = json(&out.join("diag.json"));
    assert_eq!(d["resolution"]["converged"], false);
    assert!(d["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().starts_with("resolution")));
}

#[test]
fn claim5_is_seed_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = nevlab(&["claim5", "--ks", "4,5", "--samples", "20000", "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
        std::fs::read(out.join("claim5.csv")).unwrap()
    };
    let a = run("a", "42");
    assert_eq!(a, run("b", "42"));
    assert_ne!(a, run("c", "43"));
    let m = json(&dir.path().join("a/manifest.json"));
    assert_eq!(m["config"]["seed"], 42);
    assert_eq!(m["config"]["params"]["samples"], 20000);
}

#[test]
fn dichotomy_direction_guard() {
    assert_eq!(code(&nevlab(&["dichotomy", "--profile", "exp(-abs(x))", "--direction", "a"])), 4);
    assert_eq!(code(&nevlab(&["dichotomy", "--profile", "exp(-sqrt(abs(x)))", "--direction", "b"])), 4);
}

#[test]
fn dichotomy_divergent_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = nevlab(&[
        "dichotomy", "--profile", "exp(-abs(x))", "--direction", "b", "--r-grid", "4,8,16,32", "--octaves", "10", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().last().unwrap().starts_with("verdict: "));
    verify_manifest(&out);
    let b = std::fs::read_to_string(out.join("boundary.csv")).unwrap();
    assert!(b.starts_with("T,value,increment,err\n"));
    assert_eq!(b.lines().count(), 11);
    let r = json(&out.join("report.json"));
    assert_eq!(r["route"], "majorant");
    assert!(r["boundary"]["floor"].as_f64().unwrap() > 0.0);
}
