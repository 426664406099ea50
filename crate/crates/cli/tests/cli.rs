//! End-to-end tests of the command-line surface: artifact determinism, exit
//! codes, and agreement of reported values with independent oracles.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flatext"))
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|_| panic!("missing {name}"))
}

#[test]
fn identical_configs_produce_byte_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let (d1, d2) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&d1, &d2] {
        for cmd in ["generate", "flatness", "qs"] {
            let st = bin()
                .args([cmd, "--seed", "42", "--out", dir.to_str().unwrap()])
                .status()
                .unwrap();
            assert!(st.success(), "{cmd} failed");
        }
    }
    for name in [
        "generated.json",
        "generated.csv",
        "flatness.csv",
        "flatness.json",
        "qs.json",
        "qs.csv",
    ] {
        assert_eq!(read(&d1, name), read(&d2, name), "artifact {name} differs");
    }
}

#[test]
fn flatness_of_a_line_fixture_is_identically_zero() {
    // The default generator's domain is a straight line of samples, so every
    // β and centered β in the CSV must vanish.
    let tmp = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["flatness", "--out", tmp.path().to_str().unwrap()])
        .status()
        .unwrap();
    assert!(st.success());
    let csv = read(tmp.path(), "flatness.csv");
    let mut rows = 0;
    for line in csv.lines().skip(2) {
        let cols: Vec<&str> = line.split(',').collect();
        let beta: f64 = cols[2].parse().unwrap();
        let beta_ctr: f64 = cols[3].parse().unwrap();
        assert!(beta.abs() < 1e-12 && beta_ctr.abs() < 1e-12, "{line}");
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn qs_report_matches_independent_triple_oracle() {
    // radial map fixture in the plane; the weak quasisymmetry constant is
    // recomputed here by a from-scratch triple loop over all samples.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "seed": 3,
        "generator": {
            "kind": { "kind": "radial_qc", "alpha": 0.8 },
            "n": 2, "big_n": 2, "samples_per_side": 9, "seed": 3
        }
    });
    let cfg_path = tmp.path().join("cfg.json");
    fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let st = bin()
        .args([
            "qs",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            tmp.path().to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(st.success());
    let rep: serde_json::Value = serde_json::from_str(&read(tmp.path(), "qs.json")).unwrap();
    let h = rep["data"]["report"]["h"].as_f64().unwrap();

    // Oracle: independent enumeration, no subsampling, no library calls.
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for i in 0..9 {
        for j in 0..9 {
            pts.push([-0.5 + i as f64 / 8.0, -0.5 + j as f64 / 8.0]);
        }
    }
    let alpha = 0.8f64;
    let img: Vec<[f64; 2]> = pts
        .iter()
        .map(|p| {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if r == 0.0 {
                *p
            } else {
                let s = r.powf(alpha - 1.0);
                [p[0] * s, p[1] * s]
            }
        })
        .collect();
    let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let mut oracle = 1.0f64;
    for x in 0..pts.len() {
        for y in 0..pts.len() {
            for a in 0..pts.len() {
                if x == a || y == a || x == y {
                    continue;
                }
                if d(pts[x], pts[a]) <= d(pts[y], pts[a]) {
                    let den = d(img[y], img[a]);
                    if den > 0.0 {
                        oracle = oracle.max(d(img[x], img[a]) / den);
                    }
                }
            }
        }
    }
    assert!(
        (h - oracle).abs() <= 1e-12 * oracle,
        "reported {h}, oracle {oracle}"
    );
}

#[test]
fn verify_suite_exit_codes() {
    let ok = bin().args(["verify", "--suite", "betas-sandwich"]).status().unwrap();
    assert_eq!(ok.code(), Some(0));
    let unknown = bin().args(["verify", "--suite", "nonsense"]).status().unwrap();
    assert_eq!(unknown.code(), Some(2));
}

#[test]
fn bad_input_exits_two() {
    let missing = bin()
        .args(["generate", "--config", "/nonexistent/cfg.json"])
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(2));

    // Structurally valid JSON with an invalid generator parameter.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "seed": 1,
        "generator": {
            "kind": { "kind": "radial_qc", "alpha": 7.0 },
            "n": 2, "big_n": 2, "samples_per_side": 9, "seed": 1
        }
    });
    let cfg_path = tmp.path().join("cfg.json");
    fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let st = bin()
        .args([
            "generate",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            tmp.path().to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}
