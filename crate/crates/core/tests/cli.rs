use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn cea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cea"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn documented_examples() {
    let o = cea(&[
        "verify-ck", "--family", "rotation", "--tmax", "6.28", "--samples", "200", "--seed", "42",
        "--tol", "1e-9",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["pass"], Value::Bool(true));
    assert!(v["max_residual"].as_f64().unwrap() <= 1e-12);

    let o = cea(&["critical-times", "--analysis", "idempotent", "--lambda", "2", "--mu", "1"]);
    assert_eq!(stdout_json(&o)["t_c"].as_f64(), Some(1.0));

    let o = cea(&["analyze", "--family", "example1", "--A", "1", "--s", "0", "--t", "0", "--property", "baric"]);
    let v = stdout_json(&o);
    assert_eq!(v["baric"], Value::Bool(true));
    let idx: Vec<u64> = v["weight_functions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w["index"].as_u64().unwrap())
        .collect();
    assert_eq!(idx, vec![0, 1, 2]);
}

#[test]
fn errors_name_the_flag() {
    let o = cea(&["verify-ck", "--family", "example2", "--lambda", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--mu"));

    let o = cea(&["verify-ck", "--family", "rotation", "--samples", "many"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--samples"));

    let o = cea(&["verify-ck", "--family", "rotation", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));

    let o = cea(&["analyze", "--matrix", "/nonexistent/m.txt", "--property", "baric"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--matrix"));
}

#[test]
fn property_failure_exits_one() {
    let o = cea(&["verify-ck", "--family", "example1", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_lists_defaults() {
    let o = cea(&["verify-ck", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let h = String::from_utf8_lossy(&o.stdout);
    assert!(h.contains("[default: 42]"));
    assert!(h.contains("[default: 1e-9]"));
    assert!(h.contains("[default: 200]"));
}

#[test]
fn family_file_and_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam.json");
    fs::write(&fam, r#"{"variant": "example2", "params": {"lambda": 2.0, "mu": 0.5}}"#).unwrap();
    let o = cea(&["verify-ck", "--family-file", fam.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["family"]["variant"], "example2");
    // The echoed family document reads back as the same family.
    fs::write(&fam, serde_json::to_string(&v["family"]).unwrap()).unwrap();
    let o2 = cea(&["verify-ck", "--family-file", fam.to_str().unwrap()]);
    assert_eq!(o.stdout, o2.stdout);

    let m = dir.path().join("m.txt");
    fs::write(&m, "2\n2 0\n0 0\n").unwrap();
    let o = cea(&["analyze", "--matrix", m.to_str().unwrap(), "--property", "trivial"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["class"], "non_zero_trivial");
}

#[test]
fn diagram_json_and_csv_agree() {
    let base = [
        "diagram", "--family", "rotation", "--property", "baric", "--tmax", "6", "--grid", "20",
    ];
    let csv = cea(&base);
    assert_eq!(csv.status.code(), Some(0));
    let csv = String::from_utf8(csv.stdout).unwrap();
    let mut args = base.to_vec();
    args.extend(["--format", "json"]);
    let v = stdout_json(&cea(&args));
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(csv.lines().count(), cells.len() + 1);
    for (line, cell) in csv.lines().skip(1).zip(cells) {
        let value: i64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(value, cell["value"].as_i64().unwrap());
    }
}
