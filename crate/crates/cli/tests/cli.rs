use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cfa_core::bench::{generate, metrics, InstanceSpec};
use cfa_core::cg::{solve_cg, Algorithm, CgConfig};
use cfa_core::ProblemSpec;
use serde_json::Value;
use tempfile::TempDir;

fn cfa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfa"))
        .args(args)
        .env("CFA_LOG", "warn")
        .output()
        .expect("spawn cfa")
}

fn write_csv(dir: &Path, name: &str, rows: &[&[f64]]) -> PathBuf {
    let path = dir.join(name);
    let body: String = rows
        .iter()
        .map(|r| r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    fs::write(&path, body).unwrap();
    path
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Just enough of JSON Schema for the shipped file: `$ref`, `oneOf`, `type`, `enum`,
/// `required`, `properties`, `additionalProperties: false`, `items`, `minimum`.
fn validate(root: &Value, schema: &Value, v: &Value) -> Result<(), String> {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.trim_start_matches("#/$defs/");
        return validate(root, &root["$defs"][name], v);
    }
    if let Some(alts) = schema.get("oneOf").and_then(Value::as_array) {
        let ok = alts.iter().filter(|a| validate(root, a, v).is_ok()).count();
        return if ok == 1 { Ok(()) } else { Err(format!("{ok} oneOf branches match")) };
    }
    if let Some(t) = schema.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let ok = types.iter().any(|t| match *t {
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            "null" => v.is_null(),
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "boolean" => v.is_boolean(),
            _ => false,
        });
        if !ok {
            return Err(format!("{v} is not {types:?}"));
        }
    }
    if let Some(e) = schema.get("enum").and_then(Value::as_array) {
        if !e.contains(v) {
            return Err(format!("{v} not in {e:?}"));
        }
    }
    if let (Some(m), Some(x)) = (schema.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < m {
            return Err(format!("{x} < {m}"));
        }
    }
    if let Some(obj) = v.as_object() {
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = key.as_str().unwrap();
            if !obj.contains_key(key) {
                return Err(format!("missing {key}"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (k, x) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(sub) => validate(root, sub, x).map_err(|e| format!("{k}: {e}"))?,
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("unexpected {k}"))
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), v.as_array()) {
        for x in arr {
            validate(root, items, x)?;
        }
    }
    Ok(())
}

fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/reports.schema.json");
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(v: &Value) {
    let sc = schema();
    validate(&sc, &sc, v).unwrap_or_else(|e| panic!("schema: {e}\n{v}"));
}

/// Every float in the raw output carries 17 significant digits.
fn assert_17_digits(raw: &[u8]) {
    let text = String::from_utf8_lossy(raw);
    for tok in text.split(|c: char| !(c.is_ascii_digit() || "-+.eE".contains(c))) {
        if tok.contains('.') {
            let mantissa = tok.split(['e', 'E']).next().unwrap().replace(['-', '+', '.'], "");
            assert_eq!(mantissa.len(), 17, "{tok}");
        }
    }
}

#[test]
fn identity_has_zero_objective() {
    let dir = TempDir::new().unwrap();
    let eye = write_csv(dir.path(), "eye.csv", &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
    let out = cfa(&["solve", "--input", s(&eye), "--rank", "1"]);
    let v = json(&out);
    assert!(f(&v["objective"]).abs() < 1e-9);
    assert_valid(&v);
    assert_17_digits(&out.stdout);
}

#[test]
fn running_example() {
    let dir = TempDir::new().unwrap();
    let m = write_csv(dir.path(), "m.csv", &[&[1.0, 0.5], &[0.5, 1.0]]);
    let v = json(&cfa(&["solve", "-i", s(&m), "-r", "1"]));
    assert!(f(&v["objective"]).abs() < 1e-8);
    for phi in v["phi"].as_array().unwrap() {
        assert!((f(phi) - 0.5).abs() < 1e-6, "{v}");
    }
    assert!((f(&v["explained_variance"]) - 1.0).abs() < 1e-6);
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let asym = write_csv(dir.path(), "a.csv", &[&[1.0, 0.5], &[0.2, 1.0]]);
    assert_eq!(cfa(&["solve", "-i", s(&asym), "-r", "1"]).status.code(), Some(2));
    let ragged = dir.path().join("r.csv");
    fs::write(&ragged, "1,0\n0\n").unwrap();
    assert_eq!(cfa(&["solve", "-i", s(&ragged), "-r", "1"]).status.code(), Some(2));
    let text = dir.path().join("t.csv");
    fs::write(&text, "1,x\n0,1\n").unwrap();
    assert_eq!(cfa(&["solve", "-i", s(&text), "-r", "1"]).status.code(), Some(2));
    let eye = write_csv(dir.path(), "eye.csv", &[&[1.0, 0.0], &[0.0, 1.0]]);
    assert_eq!(cfa(&["solve", "-i", s(&eye), "-r", "2"]).status.code(), Some(2));
    assert_eq!(cfa(&["certify", "-i", s(&eye), "-r", "1", "--q", "2"]).status.code(), Some(2));
    let missing = dir.path().join("nope.csv");
    assert_eq!(cfa(&["solve", "-i", s(&missing), "-r", "1"]).status.code(), Some(2));
}

#[test]
fn small_asymmetry_is_averaged_with_warning() {
    let dir = TempDir::new().unwrap();
    let m = write_csv(dir.path(), "m.csv", &[&[1.0, 0.5 + 1e-7], &[0.5, 1.0]]);
    let out = cfa(&["solve", "-i", s(&m), "-r", "1"]);
    json(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("asymmetr"));
}

#[test]
fn not_psd_exits_3() {
    let dir = TempDir::new().unwrap();
    let m = write_csv(dir.path(), "m.csv", &[&[1.0, 2.0], &[2.0, 1.0]]);
    assert_eq!(cfa(&["solve", "-i", s(&m), "-r", "1"]).status.code(), Some(3));
    assert_eq!(cfa(&["certify", "-i", s(&m), "-r", "1"]).status.code(), Some(3));
}

fn datagen(dir: &Path, args: &[&str]) -> (PathBuf, PathBuf) {
    let prefix = dir.join("inst");
    let mut all = vec!["datagen", "--output", s(&prefix)];
    all.extend_from_slice(args);
    let out = cfa(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (dir.join("inst.csv"), dir.join("inst.json"))
}

#[test]
fn strict_inner_cap_exits_4() {
    let dir = TempDir::new().unwrap();
    let (csv, _) = datagen(dir.path(), &["--class", "A1", "--big-r", "3", "--p", "8", "--seed", "2"]);
    let args = ["solve", "-i", s(&csv), "-r", "2", "--admm-max-iter", "2"];
    let loose = json(&cfa(&args));
    assert!(loose["inexact_steps"].as_u64().unwrap() > 0);
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(cfa(&strict).status.code(), Some(4));
}

#[test]
fn datagen_solve_metrics_round_trip() {
    let dir = TempDir::new().unwrap();
    let (csv, sidecar) = datagen(dir.path(), &["--class", "A1", "--big-r", "3", "--p", "20", "--seed", "4"]);
    let g = generate(&InstanceSpec::a1(3, 20, 4)).unwrap();
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    for (i, row) in rows.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            assert_eq!(x.to_bits(), g.sigma.get(i, j).to_bits());
        }
    }
    let truth: Value = serde_json::from_str(&fs::read_to_string(&sidecar).unwrap()).unwrap();
    for (a, b) in truth["phi_true"].as_array().unwrap().iter().zip(g.phi_true.iter()) {
        assert_eq!(f(a).to_bits(), b.to_bits());
    }

    let v = json(&cfa(&["solve", "-i", s(&csv), "--truth", s(&sidecar), "-r", "2"]));
    assert_valid(&v);
    let spec = ProblemSpec::new(g.sigma.clone(), 2, 1.0).unwrap();
    let out = solve_cg(&spec, Algorithm::Concave, &CgConfig::default(), None, &mut |_| {}).unwrap();
    let m = metrics(&g, &out.solution.phi, &out.solution.theta, 2);
    let got = &v["metrics"];
    assert_eq!(f(&got["error_phi"]).to_bits(), m.error_phi.to_bits());
    assert_eq!(f(&got["error_theta"]).to_bits(), m.error_theta.to_bits());
    assert_eq!(f(&got["explained_variance"]).to_bits(), m.explained_variance.to_bits());
    assert_eq!(f(&got["lambda_min"]).to_bits(), m.lambda_min.to_bits());
    assert!(m.error_phi < 1e-6);
}

#[test]
fn certify_report_and_progress() {
    let dir = TempDir::new().unwrap();
    let (csv, _) = datagen(dir.path(), &["--class", "A1", "--big-r", "3", "--p", "10", "--seed", "0"]);
    let progress = dir.path().join("progress.jsonl");
    let out = cfa(&[
        "certify", "-i", s(&csv), "-r", "2", "--bb-tol", "0.1", "--seed", "3", "--progress", s(&progress),
    ]);
    let v = json(&out);
    assert_valid(&v);
    assert_17_digits(&out.stdout);
    assert_eq!(v["termination"], "gap_closed");
    assert!(f(&v["z_f"]) - f(&v["z_lb"]) <= 0.1 + 1e-12);
    let lines: Vec<Value> = fs::read_to_string(&progress)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len() as u64, v["nodes_processed"].as_u64().unwrap());
    for (k, e) in lines.iter().enumerate() {
        assert_eq!(e["lower"].as_array().unwrap().len(), 10);
        if k > 0 {
            assert!(f(&e["z_lb"]) >= f(&lines[k - 1]["z_lb"]) - 1e-12);
        }
    }
}

#[test]
fn certify_node_cap_is_success() {
    let dir = TempDir::new().unwrap();
    let (csv, _) = datagen(dir.path(), &["--class", "A1", "--big-r", "3", "--p", "10", "--seed", "0"]);
    let v = json(&cfa(&["certify", "-i", s(&csv), "-r", "2", "--bb-tol", "1e-6", "--node-cap", "3"]));
    assert_eq!(v["termination"], "node_cap");
    assert!(v["nodes_processed"].as_u64().unwrap() <= 3);
}

fn csv_rows(raw: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(raw);
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn sweep_diagonal_and_endpoint() {
    let dir = TempDir::new().unwrap();
    let diag = write_csv(dir.path(), "d.csv", &[&[2.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.5]]);
    let out = cfa(&["sweep", "-i", s(&diag), "--sweep-ranks", "0:2"]);
    assert!(out.status.success());
    let (h, rows) = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 3);
    assert!(column(&h, &rows, "objective").iter().all(|v| v.abs() < 1e-9));

    let (csv, _) = datagen(dir.path(), &["--class", "A1", "--big-r", "2", "--p", "6", "--seed", "1"]);
    let out = cfa(&["sweep", "-i", s(&csv), "--sweep-ranks", "5"]);
    let (h, rows) = csv_rows(&out.stdout);
    assert!((column(&h, &rows, "explained_variance")[0] - 1.0).abs() < 1e-6);
}

#[test]
fn sweep_a2_explained_variance_is_monotone() {
    let dir = TempDir::new().unwrap();
    let (csv, sidecar) = datagen(dir.path(), &["--class", "A2", "--p", "200", "--seed", "0"]);
    let out = cfa(&[
        "sweep", "-i", s(&csv), "--truth", s(&sidecar), "--sweep-ranks", "1,2,3,5,8,12,20,30",
        "--tol", "1e-3", "--admm-tol-factor", "1e-3", "--admm-max-iter", "100", "--max-iter", "20",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = csv_rows(&out.stdout);
    assert!(h.contains(&"error_phi".to_string()));
    let ev = column(&h, &rows, "explained_variance");
    assert!(ev.windows(2).all(|w| w[1] >= w[0]), "{ev:?}");
    let obj = column(&h, &rows, "objective");
    assert!(obj.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{obj:?}");
}

#[test]
fn bench_rows_are_deterministic_across_jobs() {
    let run = |jobs: &str| {
        let out = cfa(&["bench", "--class", "A1", "--big-r", "2", "--p", "10", "--seeds", "3", "--jobs", jobs]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csv_rows(&out.stdout)
    };
    let (h, rows) = run("1");
    let (_, rows3) = run("3");
    assert_eq!(rows.len(), 9);
    let strip = |rows: &[Vec<String>]| -> Vec<Vec<String>> {
        let t = h.iter().position(|x| x == "wall_ms").unwrap();
        rows.iter().map(|r| r.iter().enumerate().filter(|(k, _)| *k != t).map(|(_, x)| x.clone()).collect()).collect()
    };
    assert_eq!(strip(&rows), strip(&rows3));
    let method = h.iter().position(|x| x == "method").unwrap();
    let rank = h.iter().position(|x| x == "theta_rank").unwrap();
    for r in &rows {
        if r[method] == "mtfa" {
            assert_eq!(r[rank], "2");
        }
    }
}
