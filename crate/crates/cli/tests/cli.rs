use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_intervaldyn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

fn validate(doc: &Value, schema_file: &str) {
    let path = schema_dir().join(schema_file);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(doc) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "{schema_file}: {msgs:#?}");
}

fn json_artifact(args: &[&str]) -> Value {
    let v: Value = serde_json::from_str(&stdout(args)).unwrap();
    let schema = v["$schema"].as_str().unwrap().to_string();
    validate(&v, &schema);
    v
}

fn csv_rows(text: &str) -> (Value, Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.split("\r\n");
    let config = lines.next().unwrap().strip_prefix("# config ").expect("config line");
    let config: Value = serde_json::from_str(config).unwrap();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (config, header, rows)
}

#[test]
fn tower_tent2_has_one_node() {
    let v = json_artifact(&["tower", "--map", "tent:2", "--depth-cap", "10"]);
    assert_eq!(v["result"]["nodes"].as_array().unwrap().len(), 1);
    assert_eq!(v["config"]["command"]["tower"]["depth_cap"], 10);
}

#[test]
fn tower_to_file_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    stdout(&[
        "tower",
        "--map",
        "tent:1.8",
        "--depth-cap",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    validate(&v, "tower.schema.json");
    let dot = dir.path().join("t.dot");
    stdout(&[
        "tower",
        "--map",
        "tent:1.8",
        "--depth-cap",
        "4",
        "--out",
        dot.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("// config {"));
    assert!(text.contains("digraph"));
    assert!(text.contains("@4"));
}

#[test]
fn lyap_csv_ends_near_log2() {
    let text = stdout(&["lyap", "--map", "logistic:4", "--n", "1e6", "--seed", "7"]);
    let (config, header, rows) = csv_rows(&text);
    assert_eq!(config["seed"], 7);
    assert_eq!(header, ["n", "lambda_n"]);
    let last = rows.last().unwrap();
    assert_eq!(last[0], "1000000");
    let v: f64 = last[1].parse().unwrap();
    assert!((v - std::f64::consts::LN_2).abs() < 0.01, "{v}");
    // 17 significant digits.
    let mantissa = last[1].split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn lyap_checkpoints_and_tent() {
    let text = stdout(&[
        "lyap",
        "--map",
        "tent:1.7",
        "--n",
        "500",
        "--checkpoints",
        "10,100,500",
        "--x",
        "0.3",
    ]);
    let (_, _, rows) = csv_rows(&text);
    let ns: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ns, ["10", "100", "500"]);
    for r in &rows {
        let v: f64 = r[1].parse().unwrap();
        assert!((v - 1.7f64.ln()).abs() < 1e-12);
    }
}

#[test]
fn artifacts_are_deterministic() {
    for args in [
        &["lyap", "--map", "sine", "--n", "5000", "--seed", "3"][..],
        &[
            "conj",
            "experiment",
            "--from",
            "logistic:4",
            "--to",
            "sine",
            "--samples",
            "2000",
            "--seed",
            "5",
        ][..],
        &["scan", "--params", "5", "--trials", "2", "--seed", "9"][..],
        &["induce", "profile", "--map", "logistic:4", "--seed", "2"][..],
    ] {
        assert_eq!(stdout(args), stdout(args), "{args:?}");
    }
}

#[test]
fn seeds_change_random_outputs() {
    let a = stdout(&["lyap", "--map", "logistic:4", "--n", "1000", "--seed", "1"]);
    let b = stdout(&["lyap", "--map", "logistic:4", "--n", "1000", "--seed", "2"]);
    assert_ne!(a, b);
}

#[test]
fn conj_artifacts_validate() {
    let v = json_artifact(&[
        "conj",
        "eval",
        "--from",
        "logistic:4",
        "--to",
        "sine",
        "--x",
        "0.75",
        "--depth",
        "48",
    ]);
    let h = v["result"]["value"].as_f64().unwrap();
    assert!((h - 0.736_484_448).abs() < 1e-6);
    let v = json_artifact(&["conj", "eval", "--from", "tent:2", "--to", "logistic:4", "--x", "0.5"]);
    assert_eq!(v["result"]["mode"], "explicit");
    assert!((v["result"]["value"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    let v = json_artifact(&[
        "conj",
        "experiment",
        "--from",
        "logistic:4",
        "--to",
        "sine",
        "--samples",
        "5000",
    ]);
    assert_eq!(v["result"]["signs_agree"], true);
    let v = json_artifact(&[
        "conj",
        "experiment",
        "--kind",
        "cycles",
        "--from",
        "logistic:3.2",
        "--to",
        "logistic:3.2",
        "--depth",
        "20",
    ]);
    assert_eq!(v["result"]["cycle_f"]["period"], 2);
}

#[test]
fn conj_rejects_mismatched_kneading() {
    let o = run(&[
        "conj",
        "eval",
        "--from",
        "logistic:4",
        "--to",
        "logistic:3.5",
        "--x",
        "0.3",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kneading"));
}

#[test]
fn induce_and_kneading_validate() {
    let v = json_artifact(&[
        "induce",
        "build",
        "--map",
        "logistic:4",
        "--k",
        "10",
        "--report",
        "json",
    ]);
    let r = &v["result"];
    assert_eq!(r["checks_passed"], true);
    assert_eq!(r["property_one"], true);
    assert_eq!(r["S"], Value::Null);
    assert_eq!(r["kneading"]["S"][0], 1);
    assert_eq!(r["distortion"].as_array().unwrap().len(), 11);
    let v = json_artifact(&[
        "induce",
        "profile",
        "--map",
        "logistic:4",
        "--fidelity",
        "high",
        "--seed",
        "4",
    ]);
    let r = &v["result"];
    let (a, d) = (r["assembled"].as_f64().unwrap(), r["direct"].as_f64().unwrap());
    assert!((a - d).abs() < 1e-8);
    let v = json_artifact(&["kneading", "--map", "tent:2", "--k", "6"]);
    assert_eq!(v["result"]["S"], serde_json::json!([1, 2, 3, 4, 5, 6, 7]));
    assert!(v["result"]["kneading_sequence"].as_str().unwrap().starts_with("RLL"));
}

#[test]
fn scan_lines_validate() {
    let text = stdout(&["scan", "--params", "10", "--trials", "2", "--seed", "4"]);
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 21);
    for l in &lines {
        validate(l, "scan-line.schema.json");
    }
    assert_eq!(lines[20]["summary"]["violations"], 0);
}

#[test]
fn design_run_signs() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let text = stdout(&[
        "design",
        "run",
        "--n1",
        "200",
        "--depth",
        "1",
        "--report",
        report.to_str().unwrap(),
    ]);
    let (_, header, rows) = csv_rows(&text);
    assert_eq!(header, ["n", "lambda_n", "map"]);
    assert!(rows.iter().any(|r| r[2] == "logistic:4"));
    assert!(rows.iter().any(|r| r[2] == "sine"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    validate(&v, "design.schema.json");
    assert_eq!(v["result"]["sign_f"], -1);
    assert_eq!(v["result"]["sign_g"], 1);
}

#[test]
fn design_reports_precision_limit() {
    let o = run(&["design", "run", "--depth", "3", "--max-bits", "20000"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("2"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["frobnicate"][..],
        &["lyap", "--map", "cubic:2"][..],
        &["lyap", "--map", "logistic:4", "--n", "1.5"][..],
        &["lyap", "--map", "logistic:4", "--n", "10", "--checkpoints", "11"][..],
        &["tower", "--map", "tent:2", "--eps-id", "-1"][..],
        &["lyap"][..],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn computation_errors_exit_1() {
    let o = run(&[
        "lyap",
        "--map",
        "logistic:4",
        "--x",
        "0.5",
        "--burn-in",
        "0",
        "--n",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn schema_dir_is_populated() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("schemas");
    stdout(&[
        "kneading",
        "--map",
        "sine",
        "--k",
        "3",
        "--json-schema-dir",
        d.to_str().unwrap(),
    ]);
    let n = std::fs::read_dir(&d).unwrap().count();
    assert_eq!(n, std::fs::read_dir(schema_dir()).unwrap().count());
}

#[test]
fn schema_export_needs_no_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--json-schema-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(dir.path().join("tower.schema.json").exists());
    assert_eq!(run(&[]).status.code(), Some(2));
}
