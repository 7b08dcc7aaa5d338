use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sdd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdd"))
        .args(args)
        .env_remove("SDD_ORACLE_LIMIT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn json(path: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(Path::new(path)).unwrap()).unwrap()
}

fn gen(dir: &TempDir, name: &str, extra: &[&str]) -> String {
    let file = path(dir, name);
    let mut args = vec!["gen", "--out", &file];
    args.extend_from_slice(extra);
    let out = sdd(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    file
}

#[test]
fn gen_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.json", &["--seed", "5"]);
    let b = gen(&dir, "b.json", &["--seed", "5"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let empty = gen(&dir, "e.json", &["--orders", "0"]);
    assert_eq!(code(&sdd(&["validate", "--instance", &empty])), 0);
}

#[test]
fn solve_writes_report() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", &["--orders", "5", "--seed", "2"]);
    for model in ["f1", "f2", "f2lex", "f3", "f4"] {
        let out_file = path(&dir, &format!("{model}.json"));
        let out = sdd(&["solve", "--model", model, "--instance", &inst, "--out", &out_file]);
        assert_eq!(code(&out), 0);
        let rep = json(&out_file);
        assert_eq!(rep["model_kind"], model.to_uppercase().as_str());
        assert_eq!(rep["optimal"], true);
    }
}

#[test]
fn solver_matches_oracle() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", &["--orders", "5", "--seed", "9"]);
    for model in ["f1", "f3"] {
        let s = path(&dir, "s.json");
        let o = path(&dir, "o.json");
        assert_eq!(code(&sdd(&["solve", "--model", model, "--instance", &inst, "--out", &s])), 0);
        assert_eq!(code(&sdd(&["oracle", "--model", model, "--instance", &inst, "--out", &o])), 0);
        let (a, b) = (json(&s)["objective"].as_f64().unwrap(), json(&o)["objective"].as_f64().unwrap());
        assert!((a - b).abs() < 1e-6, "{model}: {a} vs {b}");
    }
}

#[test]
fn oracle_size_guard() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", &["--orders", "8"]);
    assert_eq!(code(&sdd(&["oracle", "--model", "f1", "--instance", &inst])), 3);
    let out = Command::new(env!("CARGO_BIN_EXE_sdd"))
        .args(["oracle", "--model", "f1", "--instance", &inst, "--max-trips", "2"])
        .env("SDD_ORACLE_LIMIT", "8")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn check_plan_reports_tags() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", &["--orders", "4", "--seed", "1"]);
    let rep = path(&dir, "r.json");
    assert_eq!(code(&sdd(&["solve", "--model", "f1", "--instance", &inst, "--out", &rep])), 0);
    let mut plan = json(&rep)["plan"].clone();
    let good = path(&dir, "good.json");
    std::fs::write(&good, plan.to_string()).unwrap();
    assert_eq!(code(&sdd(&["check-plan", "--instance", &inst, "--plan", &good])), 0);

    plan["trips"] = serde_json::json!([{ "route": [0, 1, 1, 0], "start": 0.0 }]);
    plan["assignments"] = serde_json::json!([]);
    plan["unserved"] = serde_json::json!([1, 2, 3, 4]);
    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, plan.to_string()).unwrap();
    let violations = path(&dir, "v.json");
    let out = sdd(&["check-plan", "--instance", &inst, "--plan", &bad, "--out", &violations]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("route"));
    assert!(!json(&violations).as_array().unwrap().is_empty());
}

#[test]
fn compare_outputs() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", &["--seed", "4"]);
    let csv = path(&dir, "c.csv");
    let out = sdd(&["compare", "--instance", &inst, "--csv", &csv]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 6);
    let text = std::fs::read_to_string(&csv).unwrap();
    let models: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(models, ["F1", "F2", "F2LEX", "F3", "F4"]);
}

#[test]
fn simulate_csv() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", &["--family", "two-clusters", "--seed", "7"]);
    let csv = path(&dir, "s.csv");
    let report = path(&dir, "s.json");
    let args = [
        "simulate", "--instance", &inst, "--policy", "consensus", "--samples", "4", "--reps", "5", "--seed", "7",
        "--grid", "5", "--csv", &csv, "--out", &report,
    ];
    assert_eq!(code(&sdd(&args)), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("replication,policy,served,pi_bound"));
    assert_eq!(text.lines().count(), 6);
    let first = std::fs::read_to_string(&report).unwrap();
    assert_eq!(code(&sdd(&args)), 0);
    assert_eq!(first, std::fs::read_to_string(&report).unwrap());
}

#[test]
fn bad_input_exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&sdd(&["frobnicate"])), 2);
    assert_eq!(code(&sdd(&["solve", "--bogus"])), 2);
    let broken = path(&dir, "broken.json");
    std::fs::write(&broken, "{").unwrap();
    assert_eq!(code(&sdd(&["solve", "--model", "f1", "--instance", &broken])), 2);
    let missing = path(&dir, "missing.json");
    assert_eq!(code(&sdd(&["solve", "--model", "f1", "--instance", &missing])), 2);

    // Parses but fails validation: negative horizon.
    let invalid = path(&dir, "invalid.json");
    std::fs::write(&invalid, r#"{"depot": {"x": 0, "y": 0}, "horizon": -1}"#).unwrap();
    assert_eq!(code(&sdd(&["validate", "--instance", &invalid])), 1);
    assert_eq!(code(&sdd(&["solve", "--model", "f1", "--instance", &invalid])), 2);

    // Station model on an instance without stations.
    let bare = gen(&dir, "bare.json", &["--stations", "0", "--orders", "2"]);
    assert_eq!(code(&sdd(&["solve", "--model", "f3", "--instance", &bare])), 2);
}
