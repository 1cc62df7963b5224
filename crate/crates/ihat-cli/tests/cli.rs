//! End-to-end tests of the `ihat` binary: output formats, exit codes,
//! and run-to-run determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const GAMMA_SPEC: &str = r#"{"m":1,"n":0,"upper":[],"lower":[{"b":0.0,"f":1.0,"B":1.0}]}"#;

fn gamma_base(s1: f64) -> String {
    format!(
        r#"{{"spec":{GAMMA_SPEC},"z":1.0,"sigma":1.0,"s1":{s1}}}"#
    )
}

fn write_fixture(dir: &TempDir, name: &str, content: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ihat"))
        .args(args)
        .env_remove("IHAT_TOL")
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ihat"))
        .args(args)
        .env_remove("IHAT_TOL")
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn parse_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|line| line.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn eval_matches_exponential() {
    let dir = TempDir::new().unwrap();
    let spec = write_fixture(&dir, "g.json", GAMMA_SPEC);
    let out = run(&["eval", "--spec", spec.to_str().unwrap(), "--z", "0.5:5:4"]);
    let text = stdout(&out);
    assert!(text.starts_with("z,value,est_error\n"));
    let rows = parse_rows(&text);
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let (z, value) = (row[0], row[1]);
        assert!((value - (-z).exp()).abs() <= 1e-9, "z={z}: {value}");
    }
    assert!((rows[0][0] - 0.5).abs() < 1e-12);
    assert!((rows[3][0] - 5.0).abs() < 1e-9);
}

#[test]
fn mellin_closed_form_agrees_with_oracle_column() {
    let dir = TempDir::new().unwrap();
    let spec = write_fixture(&dir, "g.json", GAMMA_SPEC);
    let out = run(&["mellin", "--spec", spec.to_str().unwrap(), "--s", "1,2,3"]);
    let rows = parse_rows(&stdout(&out));
    // Mellin transform of e^{-z} is Gamma(s)
    let expected = [1.0, 1.0, 2.0];
    for (row, want) in rows.iter().zip(expected) {
        assert!((row[1] - want).abs() <= 1e-12 * want, "closed {} vs {want}", row[1]);
        assert!(row[3] <= 1e-6, "rel_err column {}", row[3]);
    }
}

#[test]
fn quotient_density_has_merged_orders_and_known_value() {
    let dir = TempDir::new().unwrap();
    let b1 = write_fixture(&dir, "b1.json", &gamma_base(2.0));
    let b2 = write_fixture(&dir, "b2.json", &gamma_base(3.0));
    let out = run(&["quotient", "--spec", b1.to_str().unwrap(), "--spec2", b2.to_str().unwrap()]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["spec"]["m"], 1);
    assert_eq!(doc["spec"]["n"], 1);
    assert_eq!(doc["validated"], true);

    // pdf at y = 1 is the beta-prime value Gamma(5)/(Gamma(2)Gamma(3)) / 2^5
    let out = run(&[
        "quotient",
        "--spec",
        b1.to_str().unwrap(),
        "--spec2",
        b2.to_str().unwrap(),
        "--y",
        "1.0",
    ]);
    let rows = parse_rows(&stdout(&out));
    assert!((rows[0][1] - 0.375).abs() <= 1e-8);
}

#[test]
fn sample_is_seed_deterministic() {
    let dir = TempDir::new().unwrap();
    let base = write_fixture(&dir, "b.json", &gamma_base(2.0));
    let args = ["sample", "--spec", base.to_str().unwrap(), "--n", "64", "--seed", "7"];
    let first = stdout(&run(&args));
    let second = stdout(&run(&args));
    assert_eq!(first, second);
    let other = stdout(&run(&[
        "sample", "--spec", base.to_str().unwrap(), "--n", "64", "--seed", "8",
    ]));
    assert_ne!(first, other);
    assert_eq!(first.lines().count(), 65); // header + 64 values
}

#[test]
fn verify_stdout_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let b1 = write_fixture(&dir, "b1.json", &gamma_base(2.0));
    let b2 = write_fixture(&dir, "b2.json", &gamma_base(3.0));
    let args = [
        "verify",
        "--spec",
        b1.to_str().unwrap(),
        "--spec2",
        b2.to_str().unwrap(),
        "--op",
        "product",
        "--n",
        "20000",
        "--seed",
        "42",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&first)).unwrap();
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn divergent_kernel_exits_2() {
    let dir = TempDir::new().unwrap();
    let spec = write_fixture(
        &dir,
        "div.json",
        r#"{"m":1,"n":0,"upper":[{"a":0.5,"e":1.0,"A":2.0}],"lower":[{"b":0.0,"f":1.0,"B":1.0}]}"#,
    );
    let out = run(&["eval", "--spec", spec.to_str().unwrap(), "--z", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("delta1"), "stderr: {err}");
}

#[test]
fn bad_input_exits_3() {
    let dir = TempDir::new().unwrap();
    let bad = write_fixture(&dir, "bad.json", "{not json");
    let out = run(&["eval", "--spec", bad.to_str().unwrap(), "--z", "1.0"]);
    assert_eq!(out.status.code(), Some(3));

    let out = run_in(dir.path(), &["eval", "--spec", "missing.json", "--z", "1.0"]);
    assert_eq!(out.status.code(), Some(3));

    // wrong JSON shape for the subcommand
    let spec = write_fixture(&dir, "g.json", GAMMA_SPEC);
    let out = run(&["dist", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    // malformed grid
    let out = run(&["eval", "--spec", spec.to_str().unwrap(), "--z", "5:1:10"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unvalidated_density_exits_4() {
    let dir = TempDir::new().unwrap();
    let base = write_fixture(&dir, "b.json", &gamma_base(2.0));
    let out = run(&["dist", "--spec", base.to_str().unwrap()]);
    let text = stdout(&out).replace("\"validated\": true", "\"validated\": false");
    let dens = write_fixture(&dir, "d.json", &text);
    let out = run(&["sample", "--spec", dens.to_str().unwrap(), "--n", "4", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unvalidated"));
}

#[test]
fn json_output_mode_emits_key_value_rows() {
    let dir = TempDir::new().unwrap();
    let spec = write_fixture(&dir, "g.json", GAMMA_SPEC);
    let out = run(&["eval", "--spec", spec.to_str().unwrap(), "--z", "1.0", "--out", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = doc.as_array().unwrap();
    assert_eq!(rows.len(), 1);
    let v = rows[0]["value"].as_f64().unwrap();
    assert!((v - (-1.0f64).exp()).abs() <= 1e-9);
}
