//! End-to-end runs of the `mimo-secrecy` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const REFERENCE: &str = r#"{"mode": "general", "H1": [[1.8, 2.0], [1.0, 3.0]], "H2": [[3.3, 1.3], [2.0, -1.5]], "S": [[5.0, 1.25], [1.25, 10.0]]}"#;
const SCALAR: &str = r#"{"mode": "aligned", "N1": [[1]], "N2": [[2]], "S": [[3]]}"#;
const FLAT: &str = r#"{"mode": "aligned", "N1": [[0.7, 0.2], [0.2, 0.4]], "N2": [[0.7, 0.2], [0.2, 0.4]], "S": [[5.0, 1.25], [1.25, 10.0]]}"#;

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mimo-secrecy")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn region(dir: &TempDir, cfg: &Path, out: &str, steps: (&str, &str)) -> String {
    let out = dir.path().join(out);
    let o = run(&["region", "--config", s(cfg), "--out", s(&out), "--r0-steps", steps.0, "--weight-steps", steps.1, "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read_to_string(out).unwrap()
}

#[test]
fn region_writes_rows_and_manifest() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "ref.json", REFERENCE);
    let csv = region(&dir, &cfg, "a.csv", ("5", "9"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "r0_target,theta,r0,r1,r2,units");
    assert_eq!(lines.len(), 46);

    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "region");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config"]["mode"], "general");
    assert!(manifest["version"].is_string() && manifest["started_at"].is_string());
}

#[test]
fn region_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "ref.json", REFERENCE);
    assert_eq!(region(&dir, &cfg, "a.csv", ("2", "3")), region(&dir, &cfg, "b.csv", ("2", "3")));
}

#[test]
fn equal_noise_region_has_zero_confidential_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "flat.json", FLAT);
    let csv = region(&dir, &cfg, "flat.csv", ("2", "3"));
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[3].parse::<f64>().unwrap(), 0.0);
        assert_eq!(f[4].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn maximize_scalar_and_units() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "scalar.json", SCALAR);
    let nats = run(&["maximize", "--config", s(&cfg), "--l1", "1", "--l2", "0"]);
    assert_eq!(nats.status.code(), Some(0));
    let v = json(&nats)["value"].as_f64().unwrap();
    assert!((v - 0.235001).abs() < 1e-6);

    let bits = run(&["maximize", "--config", s(&cfg), "--l1", "1", "--l2", "0", "--units", "bits"]);
    let b = json(&bits);
    assert_eq!(b["units"], "bits");
    assert!((b["value"].as_f64().unwrap() - v / std::f64::consts::LN_2).abs() < 1e-12);
    assert!((b["rates"]["r1"].as_f64().unwrap() - v / std::f64::consts::LN_2).abs() < 1e-12);

    let zero = run(&["maximize", "--config", s(&cfg), "--l1", "0", "--l2", "0"]);
    assert_eq!(zero.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&zero.stderr).starts_with("error:"));
}

#[test]
fn certify_optimum_and_halved_solution() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "scalar.json", SCALAR);
    let opt = write(&dir, "opt.json", r#"{"B0": [[0]], "B1": [[3]]}"#);
    let o = run(&["certify", "--config", s(&cfg), "--l1", "1", "--l2", "0", "--solution", s(&opt)]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    for group in ["kkt", "enhancement"] {
        for (name, entry) in v[group].as_object().unwrap() {
            let x = entry["value"].as_f64().unwrap();
            // Dominance entries are eigenvalue margins, the rest residuals.
            let ok = if name.starts_with("dominance") { x >= -1e-9 } else { x.abs() <= 1e-9 };
            assert!(ok, "{name}: {entry}");
        }
    }

    // A maximize report doubles as a solution file.
    let report = run(&["maximize", "--config", s(&cfg), "--l1", "1", "--l2", "0"]);
    let sol = write(&dir, "solved.json", std::str::from_utf8(&report.stdout).unwrap());
    let o = run(&["certify", "--config", s(&cfg), "--l1", "1", "--l2", "0", "--solution", s(&sol)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));

    let half = write(&dir, "half.json", r#"{"B0": [[0]], "B1": [[1.5]]}"#);
    let o = run(&["certify", "--config", s(&cfg), "--l1", "1", "--l2", "0", "--solution", s(&half)]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json(&o)["passed"], false);
}

#[test]
fn certify_equal_noise_interior_point() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "flat.json", FLAT);
    let sol = write(&dir, "sol.json", r#"{"B0": [[1, 0], [0, 1]], "B1": [[1, 0.2], [0.2, 2]]}"#);
    let o = run(&["certify", "--config", s(&cfg), "--l1", "0.5", "--l2", "0.5", "--solution", s(&sol)]);
    assert_eq!(o.status.code(), Some(0));
    let m = &json(&o)["multipliers"];
    for key in ["M0", "M1", "M2"] {
        let flat: Vec<f64> = m[key].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap())).collect();
        assert!(flat.iter().all(|x| x.abs() < 1e-12), "{key}: {flat:?}");
    }
}

#[test]
fn oracle_scalar_dimension_and_nesting() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "scalar.json", SCALAR);
    let o = run(&["oracle", "--config", s(&cfg), "--l1", "1", "--l2", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((json(&o)["value"].as_f64().unwrap() - 0.235001).abs() < 1e-6);

    let three = write(
        &dir,
        "three.json",
        r#"{"mode": "aligned", "N1": [[1,0,0],[0,1,0],[0,0,1]], "N2": [[2,0,0],[0,2,0],[0,0,2]], "S": [[1,0,0],[0,1,0],[0,0,1]]}"#,
    );
    assert_eq!(run(&["oracle", "--config", s(&three), "--l1", "1", "--l2", "0"]).status.code(), Some(1));

    let reference = write(&dir, "ref.json", REFERENCE);
    let value = |res: &str| {
        let o = run(&["oracle", "--config", s(&reference), "--l1", "1", "--l2", "1", "--resolution", res]);
        json(&o)["value"].as_f64().unwrap()
    };
    assert!(value("9") >= value("5") - 1e-12);
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let broken = write(&dir, "broken.json", "{\n  \"mode\": \"aligned\",\n  \"S\": [[1]],,\n}");
    let o = run(&["maximize", "--config", s(&broken), "--l1", "1", "--l2", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let missing = dir.path().join("absent.json");
    assert_eq!(run(&["maximize", "--config", s(&missing), "--l1", "1", "--l2", "0"]).status.code(), Some(2));
    assert_eq!(run(&["maximize", "--l1", "1"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
