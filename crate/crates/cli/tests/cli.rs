use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiflow")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn result(dir: &Path, file: &str) -> Value {
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.join(file)).unwrap()).unwrap();
    v["result"].clone()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn srb_reports_unit_eigenvalue_and_positive_density() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("doub2");
    ok(&run(&["srb", "--preset", "doub2-constant", "--out", out.to_str().unwrap()]));
    assert!((result(&out, "srb.json")["eigenvalue"].as_f64().unwrap() - 1.0).abs() < 1e-8);

    let out = tmp.path().join("nonlin");
    ok(&run(&["srb", "--preset", "nonlin-quadratic", "--out", out.to_str().unwrap()]));
    assert!(result(&out, "srb.json")["density_min"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(out.join("density.csv")).unwrap();
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "x,interval,density");
    assert_eq!(data.len(), 1 + 2 * 1025);
    assert!(data[1..].iter().all(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap() > 0.0));
}

#[test]
fn malformed_configs_exit_with_code_two() {
    let tmp = TempDir::new().unwrap();
    let bad = write_config(tmp.path(), "bad.json", r#"{"schema_version": 1, "preset": "doub2-kink", "nodez": 9}"#);
    let out = run(&["srb", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nodez"));
    assert_eq!(run(&["srb"]).status.code(), Some(2));
    assert_eq!(run(&["srb", "--preset", "doub2-nothing"]).status.code(), Some(2));
    let missing = tmp.path().join("missing.json");
    assert_eq!(run(&["uni", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn correlate_flags_the_resonant_constant_roof() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"schema_version": 1, "preset": "doub2-constant", "nodes": 129, "t_grid": {"t_max": 12.0}}"#,
    );
    let out = run(&["correlate", "--config", &cfg]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("NON-MIXING"));
    assert_eq!(result(&tmp.path().join("out"), "correlation.json")["non_mixing"], Value::Bool(true));
}

#[test]
fn correlate_fits_decay_on_the_kink_roof() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "k.json",
        r#"{"schema_version": 1, "preset": "doub2-kink", "nodes": 257, "t_grid": {"t_max": 30.0}}"#,
    );
    let out = run(&["correlate", "--config", &cfg]);
    ok(&out);
    assert!(!String::from_utf8_lossy(&out.stdout).contains("NON-MIXING"));
    let r = result(&tmp.path().join("out"), "correlation.json");
    let best = r["decay"]["best"].as_str().unwrap().to_string();
    assert!(best == "STRETCHED" || best == "EXP", "{best}");
    let fit = r["decay"]["fits"].as_array().unwrap().iter().find(|f| f["model"] == best.as_str()).unwrap();
    assert!(fit["delta"].as_f64().unwrap() > 0.0);
    assert_eq!(r["envelope"]["holds"], Value::Bool(true));
}

#[test]
fn empty_time_grid_is_a_numerical_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "e.json",
        r#"{"schema_version": 1, "preset": "doub2-kink", "nodes": 65, "t_grid": {"t_max": 0.0}}"#,
    );
    let out = run(&["correlate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("usable points"));
}

#[test]
fn spectral_sweep_and_route_equivalence() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "s.json",
        r#"{"schema_version": 1, "preset": "doub2-quadratic", "nodes": 513,
            "observables": {"e": "sin_ur", "f": "sin_ur*cos_x"},
            "b_grid": [10, 30, 100, 300], "spectral": {"route_samples": 2}}"#,
    );
    ok(&run(&["spectral", "--config", &cfg, "--seed", "5"]));
    let r = result(&tmp.path().join("out"), "spectral.json");
    assert!(r["log_slope"].as_f64().is_some());
    assert!(r["sweep"].as_array().unwrap().iter().all(|row| row["status"] == "CONTRACTED"));
    assert!(r["max_route_gap"].as_f64().unwrap() < 1e-3);
    assert_eq!(r["routes_agree"], Value::Bool(true));
    let csv = fs::read_to_string(tmp.path().join("out/dolgopyat.csv")).unwrap();
    assert!(csv.contains("# seed: 5"));
}

#[test]
fn spectral_marks_resonant_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "r.json",
        r#"{"schema_version": 1, "preset": "doub2-constant", "nodes": 129,
            "b_grid": [62.83185307179586], "spectral": {"cap": 40, "route_samples": 0}}"#,
    );
    ok(&run(&["spectral", "--config", &cfg]));
    let r = result(&tmp.path().join("out"), "spectral.json");
    assert_eq!(r["sweep"][0]["status"], "NO_CONTRACTION");
    let csv = fs::read_to_string(tmp.path().join("out/dolgopyat.csv")).unwrap();
    assert!(csv.lines().last().unwrap().contains("NO_CONTRACTION"));
}

#[test]
fn uni_verdicts() {
    let tmp = TempDir::new().unwrap();
    for (preset, verdict) in [
        ("doub2-quadratic", "NOT_COHOMOLOGOUS"),
        ("doub2-linear", "LIKELY_COHOMOLOGOUS"),
        ("doub2-constant", "LIKELY_COHOMOLOGOUS"),
    ] {
        let out_dir = tmp.path().join(preset);
        let out = run(&["uni", "--preset", preset, "--out", out_dir.to_str().unwrap()]);
        ok(&out);
        assert!(String::from_utf8_lossy(&out.stdout).starts_with(verdict));
        let r = result(&out_dir, "uni.json");
        assert_eq!(r["cohomology"]["verdict"], verdict);
        if verdict == "NOT_COHOMOLOGOUS" {
            assert!(r["cohomology"]["witness"]["d"].as_f64().unwrap() >= 0.1);
            assert!(r["partitions"].as_array().unwrap().iter().all(|p| p["status"] == "OK"));
        }
    }
}

#[test]
fn outputs_embed_metadata_and_reruns_are_bit_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "m.json",
        r#"{"schema_version": 1, "preset": "tri3-kink", "nodes": 129, "seed": 17,
            "t_grid": {"t_max": 8.0}, "output_dir": "first"}"#,
    );
    ok(&run(&["correlate", "--config", &cfg]));
    let second = tmp.path().join("second");
    ok(&run(&["correlate", "--config", &cfg, "--threads", "3", "--out", second.to_str().unwrap()]));
    let first = tmp.path().join("first");
    let meta: Value = serde_json::from_str(&fs::read_to_string(first.join("correlation.json")).unwrap()).unwrap();
    let hash = meta["meta"]["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert_eq!(meta["meta"]["seed"], 17);
    assert_eq!(meta["meta"]["nodes"], 129);
    let csv = fs::read_to_string(first.join("correlation.csv")).unwrap();
    assert!(csv.contains(&format!("# config_hash: {hash}")) && csv.contains("# nodes: 129"));

    for name in ["correlation.csv", "correlation.json"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
}
