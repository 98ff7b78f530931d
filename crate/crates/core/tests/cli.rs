use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn rglt(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rglt"))
        .args(args)
        .env("RGLT_THREADS", "1")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const TOEPLITZ_1D: &str = r#"{
    "domain": {"kind": "hypercube", "dim": 1},
    "method": "toeplitz",
    "coefficients": {"stencil": {"0": 2, "1": -1, "-1": -1}},
    "sweep": [5, 10, 20],
    "options": {"export_matrix": true}
}"#;

#[test]
fn spectrum_writes_sorted_values_and_triplets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.json", TOEPLITZ_1D);
    let out = dir.path().join("out");
    let (code, err) = rglt(&["spectrum", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(out.join("spectrum/5/spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("value"));
    let values: Vec<f64> = lines.map(|l| l.parse().unwrap()).collect();
    for (j, v) in values.iter().enumerate() {
        let want = 2.0 - 2.0 * ((j + 1) as f64 * std::f64::consts::PI / 6.0).cos();
        assert!((v - want).abs() < 1e-12);
    }
    let triplets = fs::read_to_string(out.join("spectrum/5/matrix.txt")).unwrap();
    assert_eq!(triplets.lines().count(), 13);
    assert!(triplets.lines().next().unwrap().starts_with("1 1 "));
    let side = json(&out.join("spectrum/5/matrix.json"));
    assert_eq!(side["size"], 5);
    let summary = json(&out.join("spectrum/summary.json"));
    assert_eq!(summary["command"], "spectrum");
    assert_eq!(summary["levels"].as_array().unwrap().len(), 3);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.json", TOEPLITZ_1D);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for o in [&a, &b] {
        assert_eq!(rglt(&["spectrum", "--config", &cfg, "--out", o.to_str().unwrap()]).0, 0);
    }
    for n in ["5", "10", "20"] {
        let f = format!("spectrum/{n}/spectrum.csv");
        assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap());
    }
}

#[test]
fn counts_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"domain": {"kind": "disk", "center": [0.5, 0.5], "radius": 0.5},
            "method": "shortley-weller", "coefficients": {"diffusion": ["1", "1"]},
            "sweep": [15, 31, 63], "outputs": "unused"}"#,
    );
    let out = dir.path().join("out");
    let (code, err) = rglt(&["counts", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(out.join("counts/counts.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["n", "N", "d_omega", "ratio", "band_count_2h", "near_boundary_k2"]);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1][0], "15x15");
    assert_eq!(rows[1][1], "225");
    let ratio: f64 = rows[3][3].parse().unwrap();
    assert!((ratio - std::f64::consts::FRAC_PI_4).abs() < 0.05);
}

#[test]
fn compare_sw_disk_improves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"domain": {"kind": "disk", "center": [0.5, 0.5], "radius": 0.4},
            "method": "shortley-weller", "coefficients": {"diffusion": ["1", "1"]},
            "sweep": [15, 31], "options": {"hermitian_part": true}}"#,
    );
    let out = dir.path().join("out");
    let (code, err) = rglt(&["compare", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let s = json(&out.join("compare/summary.json"));
    let levels = s["report"]["levels"].as_array().unwrap();
    let w: Vec<f64> = levels.iter().map(|l| l["report"]["wasserstein1"].as_f64().unwrap()).collect();
    assert!(w[1] < w[0]);
    assert!(out.join("compare/31x31/report.json").exists());
}

#[test]
fn acs_identical_configs() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"domain": {"kind": "hypercube", "dim": 1}, "method": "glt-expr",
        "coefficients": {"expr": {"product": [{"diag_d": "x1"}, {"toeplitz": {"0": 2, "1": -1, "-1": -1}}]}},
        "sweep": [16, 32]}"#;
    let a = write_config(dir.path(), "a.json", body);
    let b = write_config(dir.path(), "b.json", body);
    let out = dir.path().join("out");
    let (code, err) = rglt(&["acs", "--config", &a, "--config-b", &b, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let s = json(&out.join("acs/summary.json"));
    assert_eq!(s["dacs_estimate"].as_f64(), Some(0.0));
    assert_eq!(s["pmea_of_symbol_difference"].as_f64(), Some(0.0));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let bad = write_config(dir.path(), "bad.json", r#"{"domain": {"kind": "disk"}, "method": "toeplitz", "sweep": [4]}"#);
    assert_eq!(rglt(&["counts", "--config", &bad, "--out", out]).0, 2);
    assert_eq!(rglt(&["counts", "--config", "/nonexistent.json", "--out", out]).0, 2);
    let dec = write_config(
        dir.path(),
        "dec.json",
        r#"{"domain": {"kind": "hypercube", "dim": 1}, "method": "toeplitz",
            "coefficients": {"stencil": {"0": 2}}, "sweep": [8, 4]}"#,
    );
    assert_eq!(rglt(&["spectrum", "--config", &dec, "--out", out]).0, 2);
    // eigenvalue distribution of a non-Hermitian matrix without symmetrization
    let shift = write_config(
        dir.path(),
        "shift.json",
        r#"{"domain": {"kind": "hypercube", "dim": 1}, "method": "toeplitz",
            "coefficients": {"stencil": {"1": 1}}, "sweep": [4, 8]}"#,
    );
    assert_eq!(rglt(&["compare", "--config", &shift, "--out", out]).0, 3);
    assert_eq!(rglt(&["frobnicate"]).0, 2);
    assert_eq!(rglt(&["--help"]).0, 0);
}
