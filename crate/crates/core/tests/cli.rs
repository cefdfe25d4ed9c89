mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hamalg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamalg")).args(args).env_remove("HAMALG_SEED").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn valid(doc: &Value) {
    let errs = common::schema_errors(doc);
    assert!(errs.is_empty(), "{errs:#?}");
}

#[test]
fn verify_operator() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o =
        hamalg(&["verify", "--realization", "operator", "--dim", "3", "--hbar", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    valid(&r);
    assert_eq!(r["passed"], true);
    assert_eq!(r["algebra"]["dim"], 3);
    assert_eq!(r["checks"].as_array().unwrap().len(), 7);
}

#[test]
fn verify_composed_unequal_constants() {
    let o = hamalg(&["verify", "--composed", "--a1", "1", "--a2", "4", "--a12", "9", "--trials", "50"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    valid(&r);
    assert_eq!(r["algebra"]["realization"], "composed");
    assert_eq!(r["algebra"]["a12"], 9.0);
}

#[test]
fn verify_hybrid_and_phase_space() {
    for realization in ["hybrid", "phase-space"] {
        let o = hamalg(&["verify", "--realization", realization, "--trials", "20"]);
        assert_eq!(code(&o), 0, "{realization}");
        valid(&serde_json::from_slice(&o.stdout).unwrap());
    }
}

#[test]
fn verify_usage_errors() {
    assert_eq!(code(&hamalg(&["verify", "--dim", "0"])), 2);
    assert_eq!(code(&hamalg(&["verify", "--hbar", "-1"])), 2);
    assert_eq!(code(&hamalg(&["verify", "--trials", "0"])), 2);
    assert_eq!(code(&hamalg(&["verify", "--realization", "lattice"])), 2);
    let o = hamalg(&["verify", "--out", "/nonexistent-dir/r.json"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot write"));
}

#[test]
fn verify_mutation_fails() {
    let o = hamalg(&["verify", "--alpha-scale", "1.1", "--trials", "20"]);
    assert_eq!(code(&o), 1);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    valid(&r);
    assert_eq!(r["algebra"]["realization"], "corrupted");
    let cr = r["checks"].as_array().unwrap().iter().find(|c| c["identity"] == "canonical_relation").unwrap();
    assert_eq!(cr["passed"], false);
    let o = hamalg(&["verify", "--composed", "--alpha-scale", "1.1", "--trials", "20"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn config_file_and_seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"realization": "operator", "dim": 3, "trials": 5, "seed": 7}"#).unwrap();
    let o = hamalg(&["verify", "--config", cfg.to_str().unwrap(), "--dim", "2"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["algebra"]["dim"], 2);
    assert_eq!(r["checks"][0]["trials"], 5);
    assert_eq!(r["checks"][0]["seed"], 7);

    let env = |seed_flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_hamalg"));
        c.args(["verify", "--trials", "2"]).env("HAMALG_SEED", "11");
        if let Some(s) = seed_flag {
            c.args(["--seed", s]);
        }
        let r: Value = serde_json::from_slice(&c.output().unwrap().stdout).unwrap();
        r["checks"][0]["seed"].as_u64().unwrap()
    };
    assert_eq!(env(None), 11);
    assert_eq!(env(Some("3")), 3);
    let o = hamalg(&["verify", "--trials", "2"]);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["checks"][0]["seed"], 0);

    std::fs::write(&cfg, r#"{"dimension": 3}"#).unwrap();
    assert_eq!(code(&hamalg(&["verify", "--config", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&hamalg(&["verify", "--config", "/nonexistent.json"])), 2);
}

#[test]
fn deterministic_across_runs_and_modes() {
    let strip = |o: Output| {
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("timestamp");
        v
    };
    let a = strip(hamalg(&["verify", "--trials", "30", "--seed", "4"]));
    let b = strip(hamalg(&["verify", "--trials", "30", "--seed", "4"]));
    let c = strip(hamalg(&["--sequential", "verify", "--trials", "30", "--seed", "4"]));
    let d = strip(hamalg(&["verify", "--trials", "30", "--seed", "5"]));
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_ne!(a, d);
    let x = hamalg(&["brackets", "--trials", "10", "--budget", "50"]).stdout;
    let y = hamalg(&["--sequential", "brackets", "--trials", "10", "--budget", "50"]).stdout;
    assert_eq!(x, y);
}

#[test]
fn brackets_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.json");
    let o = hamalg(&["brackets", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    valid(&r);
    assert_eq!(r["surveys"].as_array().unwrap().len(), 4);

    let o = hamalg(&["brackets", "--kind", "hybrid", "--trials", "50"]);
    assert_eq!(code(&o), 0);
    let alias = hamalg(&["brackets", "--kind", "hybrid_paper", "--trials", "50"]);
    assert_eq!(alias.stdout, o.stdout);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let d = &r["surveys"][0]["defects"];
    for key in ["antisymmetry_defect", "jacobi_defect", "derivation_defect"] {
        assert!(d[key].as_f64().unwrap() <= 1e-10, "{key}");
    }
    assert_eq!(code(&hamalg(&["brackets", "--kind", "anderson", "--budget", "0"])), 2);
}

#[test]
fn simulate_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("t.csv");
    let summary = dir.path().join("s.json");
    let o = hamalg(&[
        "simulate",
        "--regime",
        "qq",
        "--out",
        csv_path.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let s = read_json(&summary);
    valid(&s);
    assert!((s["back_reaction_gap"].as_f64().unwrap() - 0.91).abs() <= 1e-12);
    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 21);
    let t: Vec<f64> = rdr.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(t.len(), 21);
    assert!(t.windows(2).all(|w| w[1] > w[0]));

    let o = hamalg(&["simulate", "--regime", "quantum_classical", "--out", csv_path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let s: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(s["back_reaction_gap"].as_f64().unwrap() <= 1e-12);

    let o = hamalg(&["simulate", "--samples", "4"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("t,p1_p1,"));
    assert_eq!(text.lines().count(), 5);
    let s: Value = serde_json::from_slice(&o.stderr).unwrap();
    valid(&s);

    assert_eq!(code(&hamalg(&["simulate", "--dt", "0"])), 2);
    assert_eq!(code(&hamalg(&["simulate", "--samples", "1"])), 2);
    assert_eq!(code(&hamalg(&["simulate", "--g0", "-0.5", "--samples", "2"])), 0);
}

#[test]
fn uniqueness_verdicts() {
    let o = hamalg(&["uniqueness", "--a1", "1", "--a2", "1", "--a12", "1"]);
    assert_eq!(code(&o), 0);
    valid(&serde_json::from_slice(&o.stdout).unwrap());
    let o = hamalg(&["uniqueness", "--a1", "1", "--a2", "4", "--a12", "9"]);
    assert_eq!(code(&o), 1);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["left"]["measured_factor"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-10);
    assert_eq!(code(&hamalg(&["uniqueness", "--a1", "0"])), 2);
}

#[test]
fn uniqueness_scan() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("scan.json");
    let o = hamalg(&["uniqueness", "scan", "--grid", "0.25:4:5", "--json", json.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    valid(&read_json(&json));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 125);
    let passing: Vec<_> = rows.iter().filter(|r| &r[7] == "true").collect();
    assert_eq!(passing.len(), 5);
    assert!(passing.iter().all(|r| r[0] == r[1] && r[1] == r[2]));
    assert_eq!(code(&hamalg(&["uniqueness", "scan", "--grid", "1:4"])), 2);
}

#[test]
fn help_and_unknown_subcommand() {
    assert_eq!(code(&hamalg(&["--help"])), 0);
    assert_eq!(code(&hamalg(&["frobnicate"])), 2);
    assert_eq!(code(&hamalg(&[])), 2);
}
