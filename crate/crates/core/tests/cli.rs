//! The binary: exit codes, report schema, CSV output, determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scalarflat"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stripped(stdout: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(stdout).expect("stdout is JSON");
    v["provenance"]["timings"] = serde_json::Value::Null;
    v
}

fn schema() -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&v).expect("schema compiles")
}

fn assert_valid(schema: &jsonschema::JSONSchema, doc: &serde_json::Value) {
    if let Err(errors) = schema.validate(doc) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("report violates schema: {msgs:#?}");
    }
}

#[test]
fn full_report_validates_against_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "report",
        scenario("point-n3.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_valid(&schema(), &doc);
    assert_eq!(doc["verdict"], "CompleteEvidence");
    assert_eq!(doc["certificate"]["granted"], true);
    let props = doc["properties"].as_array().unwrap();
    assert_eq!(props.len(), 5);
    assert!(props.iter().all(|p| p["passed"] == true));
}

#[test]
fn partial_reports_validate_against_schema() {
    let schema = schema();
    for (cmd, file) in [
        ("wolff", "segment-n4.toml"),
        ("capacity", "cantor-quarter-n3.toml"),
        ("probe", "plane2-n4.toml"),
        ("wolff", "two-points-n5.toml"),
    ] {
        let out = run(&[cmd, scenario(file).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{cmd} {file}: {}", String::from_utf8_lossy(&out.stderr));
        let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_valid(&schema, &doc);
        assert_eq!(doc["command"], cmd);
    }
}

#[test]
fn same_seed_gives_identical_output() {
    let path = scenario("plane2-n4.toml");
    let a = run(&["probe", path.to_str().unwrap(), "--seed", "7"]);
    let b = run(&["probe", path.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stripped(&a.stdout), stripped(&b.stdout));
}

#[test]
fn overrides_are_echoed() {
    let out = run(&["wolff", scenario("point-n3.toml").to_str().unwrap(), "--mmax", "9", "--n", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["scenario"]["config"]["n"], 5);
    assert_eq!(doc["profiles"][0]["terms"].as_array().unwrap().len(), 10);
}

#[test]
fn csv_profiles_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "wolff",
        scenario("point-n3.toml").to_str().unwrap(),
        "--mmax",
        "6",
        "--format",
        "csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("profile-0.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "k,rho_k,ball_mass,term,partial_sum");
    // unit Dirac at the sample: term 2^k, partial sum 2^{k+1} - 1
    assert_eq!(rows[7], "6,0.015625,1,64,127");
}

#[test]
fn invalid_configuration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"bad\"\nn = 3\n[singular]\nkind = \"kplane\"\nk = 3\n").unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["wolff".into(), bad.display().to_string()],
        vec!["wolff".into(), dir.path().join("missing.toml").display().to_string()],
        vec!["wolff".into(), scenario("point-n3.toml").display().to_string(), "--mmax".into(), "3".into()],
        vec!["capacity".into(), scenario("point-n3.toml").display().to_string(), "--grid".into(), "0.5".into()],
        vec!["wolff".into(), scenario("point-n3.toml").display().to_string(), "--format".into(), "csv".into()],
    ];
    for args in cases {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
        assert!(out.stdout.is_empty());
    }
}
