use std::path::Path;

use assert_cmd::Command;
use serde_json::Value;
use tempfile::TempDir;

use curvlab::disc_deformations::RotMetric;

fn curvlab() -> Command {
    let mut cmd = Command::cargo_bin("curvlab").unwrap();
    cmd.env_remove("CURVLAB_SEED");
    cmd
}

fn stdout(cmd: &mut Command, code: i32) -> String {
    let out = cmd.output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(code), "stdout:\n{text}\nstderr:\n{err}");
    text
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn jsonl(file: &str) -> Vec<Value> {
    std::fs::read_to_string(file).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn check_exit_codes() {
    let out = stdout(curvlab().args(["check", "--condition", "psc", "--n", "4", "--operator", "identity"]), 0);
    assert_eq!(out.trim(), "psc n=4 in margin=12");
    let out = stdout(curvlab().args(["check", "--condition", "psc", "--operator", "model:n=5,q=1"]), 1);
    assert!(out.contains(" out "));
    stdout(curvlab().args(["check", "--condition", "p_curv", "--param", "p=1", "--operator", "model:n=7,q=4"]), 0);

    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, "{\"n\": 3").unwrap();
    stdout(curvlab().args(["check", "--condition", "psc", "--operator", &bad]), 2);
    stdout(curvlab().args(["check", "--condition", "psc", "--n", "6", "--operator", "model:n=5,q=3"]), 2);
    stdout(curvlab().args(["check", "--condition", "bogus", "--n", "4", "--operator", "identity"]), 2);
    stdout(curvlab().args(["check", "--condition", "psc", "--operator", "identity"]), 2);
}

#[test]
fn operator_files_round_trip() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "op.json");
    let op = curvlab::curvature_algebra::model_operator(6, 3).unwrap();
    std::fs::write(&file, op.to_json().to_string()).unwrap();
    let out = stdout(curvlab().args(["check", "--condition", "psc", "--operator", &file]), 0);
    assert_eq!(out.trim(), "psc n=6 in margin=6");
}

#[test]
fn stability_tables() {
    let out = stdout(curvlab().args(["stability", "--condition", "psc", "--n", "5..8", "--expect", "3,3,3,3"]), 0);
    assert_eq!(out.lines().count(), 5);
    stdout(curvlab().args(["stability", "--condition", "psc", "--n", "5..8", "--expect", "3,3,3,4"]), 1);
    stdout(curvlab().args(["stability", "--condition", "k_pos_ric", "--n", "7", "--sweep", "k=2..7", "--expect", "7,6,5,4,3,3"]), 0);

    let dir = TempDir::new().unwrap();
    let table = path(&dir, "pcurv.json");
    stdout(
        curvlab().args(["stability", "--condition", "p_curv", "--n", "7", "--sweep", "p=0..2", "--expect", "3,4,5", "--out", &table]),
        0,
    );
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&table).unwrap()).unwrap();
    assert!(v.to_string().contains("\"codim\":5"));
    // one expectation per row
    stdout(curvlab().args(["stability", "--condition", "psc", "--n", "5..8", "--expect", "3,3"]), 2);
}

#[test]
fn bend_demo_writes_a_tilde_curve() {
    let dir = TempDir::new().unwrap();
    let (csv, trace) = (path(&dir, "curve.csv"), path(&dir, "trace.jsonl"));
    let out = stdout(curvlab().args(["bend", "--condition", "psc", "--n", "7", "--q", "4", "--out", &csv, "--trace", &trace]), 0);
    assert!(out.contains("class GammaTildeB partition ["), "{out}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("s,theta,kappa,r,t"));
    assert!(text.lines().count() > 100);
    let rows = jsonl(&trace);
    // the axis point r = 0 carries no margin
    let data_rows = text.lines().count() - 1;
    assert!(rows.len() <= data_rows && rows.len() + 1 >= data_rows, "{} trace rows, {data_rows} curve rows", rows.len());
    assert!(rows.iter().all(|r| r["condition"] == "psc" && r["margin"].as_f64().unwrap() > 0.0));

    let svg = path(&dir, "curve.svg");
    stdout(curvlab().args(["export", "--input", &csv, "--out", &svg]), 0);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    stdout(curvlab().args(["export", "--input", &csv, "--out", &path(&dir, "curve.png")]), 2);
}

#[test]
fn bend_rejects_bad_input_and_flat_ambients_fail() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "curve.csv");
    stdout(curvlab().args(["bend", "--condition", "psc", "--n", "7", "--q", "9", "--out", &csv]), 2);
    stdout(curvlab().args(["bend", "--condition", "psc", "--n", "7", "--q", "4", "--ambient", "hyperbolic", "--out", &csv]), 2);
    // zero scalar curvature at the start of the curve
    stdout(curvlab().args(["bend", "--condition", "psc", "--n", "7", "--q", "4", "--ambient", "flat", "--out", &csv]), 1);
}

#[test]
fn deform_a_fixture() {
    let dir = TempDir::new().unwrap();
    let (trace, profile) = (path(&dir, "trace.jsonl"), path(&dir, "final.json"));
    let out = stdout(
        curvlab().args([
            "deform", "--condition", "psc", "--input", "fixture:psc:0", "--grid-n", "1024", "--samples", "5", "--trace", &trace,
            "--profile", &profile,
        ]),
        0,
    );
    let within = out.lines().find_map(|l| l.split("final metric within ").nth(1)).expect("final defect line");
    assert!(within.trim().parse::<f64>().unwrap() <= 1e-6, "{out}");

    let rows = jsonl(&trace);
    assert_eq!(rows.len(), 20);
    for r in &rows {
        for key in ["stage", "s", "min_margin", "sigma_or_delta_star"] {
            assert!(r.get(key).is_some(), "{key} missing in {r}");
        }
        assert!(r["min_margin"].as_f64().unwrap() > 0.0);
    }
    let g = RotMetric::from_json(&serde_json::from_str(&std::fs::read_to_string(&profile).unwrap()).unwrap()).unwrap();
    assert_eq!((g.q, g.n), (4, 7));

    let table = path(&dir, "final.csv");
    stdout(curvlab().args(["export", "--input", &profile, "--out", &table]), 0);
    assert_eq!(std::fs::read_to_string(&table).unwrap().lines().next(), Some("t,alpha,beta,beta_d1,beta_d2"));
}

#[test]
fn deform_input_errors() {
    let dir = TempDir::new().unwrap();
    let (trace, profile) = (path(&dir, "t.jsonl"), path(&dir, "p.json"));
    for input in ["fixture:psc:99", "fixture:nope:0", "missing.json"] {
        stdout(
            curvlab().args(["deform", "--condition", "psc", "--input", input, "--trace", &trace, "--profile", &profile]),
            2,
        );
    }
}

fn verify_report(dir: &TempDir, name: &str, extra: &[&str], env_seed: Option<&str>) -> String {
    let out = path(dir, name);
    let mut cmd = curvlab();
    cmd.args(["verify", "--criteria", "1,3,4", "--out", &out]).args(extra);
    if let Some(s) = env_seed {
        cmd.env("CURVLAB_SEED", s);
    }
    let text = stdout(&mut cmd, 0);
    assert!(text.ends_with("3 passed, 0 failed\n"), "{text}");
    std::fs::read_to_string(out).unwrap()
}

#[test]
fn verify_is_deterministic_and_matches_golden() {
    let dir = TempDir::new().unwrap();
    let a = verify_report(&dir, "a.json", &[], None);
    let b = verify_report(&dir, "b.json", &[], None);
    assert_eq!(a, b);
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/verify_1_3_4.json");
    assert_eq!(a.trim_end(), std::fs::read_to_string(golden).unwrap().trim_end());
}

#[test]
fn seed_precedence() {
    let dir = TempDir::new().unwrap();
    let seed = |text: &str| serde_json::from_str::<Value>(text).unwrap()["config"]["seed"].as_u64().unwrap();
    assert_eq!(seed(&verify_report(&dir, "env.json", &[], Some("0x10"))), 16);
    assert_eq!(seed(&verify_report(&dir, "flag.json", &["--seed", "5"], Some("0x10"))), 5);

    let cfg = path(&dir, "cfg.json");
    std::fs::write(&cfg, r#"{"seed": 3}"#).unwrap();
    assert_eq!(seed(&verify_report(&dir, "cfg.json.out", &["--config", &cfg], None)), 3);
    assert_eq!(seed(&verify_report(&dir, "cfg_env.json", &["--config", &cfg], Some("9"))), 9);
}

#[test]
fn verify_input_errors() {
    let dir = TempDir::new().unwrap();
    stdout(curvlab().args(["verify", "--criteria", "1"]).env("CURVLAB_SEED", "zz"), 2);
    stdout(curvlab().args(["verify", "--criteria", "12"]), 2);
    let cfg = path(&dir, "cfg.json");
    std::fs::write(&cfg, r#"{"seed": 3, "bogus": 1}"#).unwrap();
    stdout(curvlab().args(["verify", "--config", &cfg]), 2);
    stdout(curvlab().args(["frobnicate"]), 2);
}
