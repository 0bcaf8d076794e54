use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn klsrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_klsrp"))
        .args(args)
        .env_remove("KLSRP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn checks(report: &Value) -> &Vec<Value> {
    report["checks"].as_array().unwrap()
}

fn check<'a>(report: &'a Value, suite: &str, name: &str) -> &'a Value {
    checks(report)
        .iter()
        .find(|c| c["suite"] == suite && c["name"] == name)
        .unwrap_or_else(|| panic!("no check {suite}.{name}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn randomized_matrix_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kls.json");
    let o = klsrp(&["verify", "--suite", "kls", "--trials", "10000", "--seed", "7", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    assert_eq!(r["schema_version"], "klsrp-report/1");
    assert_eq!(r["seed"], 7);
    assert_eq!(r["config"]["random"]["seed"], 7);
    let c = check(&r, "kls", "random_triples");
    assert_eq!(c["status"], "pass");
    assert!(c["slacks"]["min_normalized"].as_f64().unwrap() >= -1e-10);
    assert_eq!(c["values"]["trials"], 10000);
    assert_eq!(c["inputs_digest"].as_str().unwrap().len(), 64);
    assert!(r["environment"]["version"].is_string());
    assert!(r["timing"]["total_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn square_lattice_integral() {
    let o = klsrp(&["integral", "--dim", "2", "--tol", "1e-5"]);
    assert_eq!(code(&o), 0);
    let stderr = String::from_utf8_lossy(&o.stderr);
    let line = stderr.lines().find(|l| l.starts_with("I_2 = ")).expect("value line");
    let v: f64 = line["I_2 = ".len()..].split_whitespace().next().unwrap().parse().unwrap();
    assert!((v - 0.909173).abs() <= 1e-5, "{v}");
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(check(&report, "criterion", "integral")["status"], "pass");
}

#[test]
fn rotor_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rotor.json");
    let o = klsrp(&[
        "verify", "--suite", "rotor", "--d", "1", "--edge", "4", "--cutoff", "2", "--inertia", "1", "--coupling", "1",
        "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = read_json(&out);
    for name in ["ground_state", "sum_rule", "symmetry"] {
        assert_eq!(check(&r, "rotor", name)["status"], "pass", "{name}");
    }
    let momenta: Vec<&Value> = checks(&r)
        .iter()
        .filter(|c| c["name"].as_str().unwrap().starts_with("momentum"))
        .collect();
    assert_eq!(momenta.len(), 4);
    assert!(momenta.iter().all(|c| c["status"] == "pass"));
    let g = check(&r, "rotor", "momentum[k=1.5708]")["values"]["g"].as_f64().unwrap();
    assert!((g - 0.175938).abs() < 1e-6);
    assert_eq!(r["summary"]["failed"], 0);
}

#[test]
fn rerun_from_embedded_config_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    let o = klsrp(&["verify", "--suite", "kls,ladder,rotor", "--trials", "300", "--seed", "11", "--out", s(&first)]);
    assert_eq!(code(&o), 0);
    let o = klsrp(&["verify", "--config", s(&first), "--out", s(&second)]);
    assert_eq!(code(&o), 0);
    let (a, b) = (read_json(&first), read_json(&second));
    assert_eq!(a["checks"], b["checks"]);
    assert_eq!(a["config"]["suites"], b["config"]["suites"]);
    assert_eq!(b["seed"], 11);
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "suites = [\"kls\"]\n[model]\ncutoff = 3\n[random]\nseed = 5\ntrials = 40\n").unwrap();
    let out = dir.path().join("r.json");
    let o = klsrp(&["verify", "--config", s(&cfg), "--seed", "9", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let r = read_json(&out);
    assert_eq!(r["seed"], 9);
    assert_eq!(r["config"]["model"]["cutoff"], 3);
    assert_eq!(r["config"]["random"]["trials"], 40);
    assert_eq!(r["config"]["suites"], serde_json::json!(["kls"]));
}

#[test]
fn usage_errors_exit_two_with_field_path() {
    let o = klsrp(&["verify", "--suite", "rotor", "--edge", "3"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.edge"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[tolerances]\nobservable = 1e-8\ninequalty = 1e-10\n").unwrap();
    let o = klsrp(&["verify", "--config", s(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tolerances.inequalty"));

    assert_eq!(code(&klsrp(&["verify", "--suite", "nope"])), 2);
    assert_eq!(code(&klsrp(&["sweep", "--param", "edge", "--values", "4,5"])), 2);
    assert_eq!(code(&klsrp(&["frobnicate"])), 2);
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.toml");
    std::fs::write(&cfg, "[tolerances]\nidentity = 1e-30\n").unwrap();
    let out = dir.path().join("r.json");
    let o = klsrp(&["verify", "--suite", "vectorize", "--trials", "20", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 1);
    let r = read_json(&out);
    let failing = r["summary"]["failing"].as_array().unwrap();
    assert!(failing.iter().any(|f| f == "vectorize.lemma_identities"));
}

#[test]
fn unreachable_tolerance_exits_three() {
    let o = klsrp(&["integral", "--dim", "2", "--tol", "1e-16"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn flagged_checks_never_fail() {
    let o = klsrp(&["integral", "-d", "1"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let c = check(&r, "criterion", "integral");
    assert_eq!(c["status"], "flagged");
    assert_eq!(c["values"]["diverged"], true);
    assert_eq!(r["summary"]["flagged"], 1);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("reports");
    let o = Command::new(env!("CARGO_BIN_EXE_klsrp"))
        .args(["kls", "--trials", "50", "--seed", "2"])
        .env("KLSRP_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let r = read_json(&target.join("kls.json"));
    assert_eq!(r["command"], "kls");
    assert_eq!(r["seed"], 2);
}

#[test]
fn momentum_table_and_sparse_export() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("m.csv");
    let coo = dir.path().join("h.coo");
    let o = klsrp(&["diagonalize", "--format", "csv", "--out", s(&csv_path), "--coo", s(&coo)]);
    assert_eq!(code(&o), 0);
    let mut rd = csv::Reader::from_path(&csv_path).unwrap();
    let header = rd.headers().unwrap().clone();
    assert_eq!(&header[0], "k0");
    assert!(header.iter().any(|h| h == "slack_chi_bound"));
    assert_eq!(rd.records().count(), 4);

    let mut entries = std::collections::HashMap::new();
    for line in std::fs::read_to_string(&coo).unwrap().lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        let (r, c): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let (re, im): (f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap());
        assert!(r < 625 && c < 625);
        entries.insert((r, c), (re, im));
    }
    for (&(r, c), &(re, im)) in &entries {
        let &(re2, im2) = entries.get(&(c, r)).expect("transpose entry");
        assert_eq!((re, im), (re2, -im2));
    }
}

#[test]
fn sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = klsrp(&["sweep", "--param", "inertia", "--values", "0.5,2", "--format", "csv", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let mut rd = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "0.5");
    assert!(rows.iter().all(|r| &r[r.len() - 1] == "true"));
}
