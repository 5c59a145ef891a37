use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const SMALL: [&str; 8] = [
    "--num-eigenvalues",
    "40",
    "--grid",
    "800",
    "--gl-grid",
    "96",
    "--gl-count",
    "30",
];

fn trispectral(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trispectral"))
        .args(args)
        .output()
        .unwrap()
}

fn write_potential(dir: &Path, name: &str, f: impl Fn(f64) -> f64) -> String {
    let n = 800;
    let a = std::f64::consts::PI;
    let samples: Vec<f64> = (0..=n).map(|i| f(a * i as f64 / n as f64)).collect();
    let path = dir.join(name);
    fs::write(
        &path,
        json!({ "x0": 0.0, "x1": a, "samples": samples }).to_string(),
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

fn run_ok(args: &[&str]) -> String {
    let out = trispectral(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn forward_emits_json_and_csv() {
    let dir = TempDir::new().unwrap();
    let q = write_potential(dir.path(), "q.json", |x| x);
    let doc: Value =
        serde_json::from_str(&run_ok(&[&["forward", "--input", &q][..], &SMALL].concat())).unwrap();
    assert!(doc.is_object());
    let csv = run_ok(&[&["forward", "--input", &q, "--format", "csv"][..], &SMALL].concat());
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("branch,k,square"));
    // four half sequences of 40 and a full sequence of 80
    assert_eq!(lines.count(), 4 * 40 + 80);
}

#[test]
fn forward_then_reconstruct_writes_siblings() {
    let dir = TempDir::new().unwrap();
    let q = write_potential(dir.path(), "q.json", |x| x);
    let spectra = dir.path().join("spectra.json");
    let spectra = spectra.to_str().unwrap();
    run_ok(&[&["forward", "--input", &q, "--output", spectra][..], &SMALL].concat());
    let out = dir.path().join("q_rec.csv");
    let out = out.to_str().unwrap();
    let args = [
        &[
            "reconstruct",
            "--input",
            spectra,
            "--output",
            out,
            "--format",
            "csv",
        ][..],
        &[
            "--missing-nu1",
            "1",
            "--missing-nu2",
            "2",
            "--dump-product",
            "3",
        ],
        &SMALL,
    ]
    .concat();
    let res = trispectral(&args);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(String::from_utf8_lossy(&res.stderr).contains("# omega"));
    let csv = fs::read_to_string(out).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 96 + 1);
    let completed: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("q_rec.completed.json")).unwrap())
            .unwrap();
    assert!(completed.is_object());
    let residuals = fs::read_to_string(dir.path().join("q_rec.residuals.csv")).unwrap();
    assert!(residuals.lines().count() > 1);

    let report: Value = serde_json::from_str(&run_ok(&["validate", "--input", spectra])).unwrap();
    assert!(report.is_object());
}

#[test]
fn roundtrip_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let q = write_potential(dir.path(), "q.json", |x| x + 0.2 * (3.0 * x).cos());
    let args = [
        &[
            "roundtrip",
            "--input",
            &q,
            "--missing-nu1",
            "1",
            "--missing-nu2",
            "2",
        ][..],
        &SMALL,
    ]
    .concat();
    let a = run_ok(&args);
    assert_eq!(a, run_ok(&args));
    let report: Value = serde_json::from_str(&a).unwrap();
    let l2 = report["l2_error"].as_f64().unwrap();
    assert!(l2 < 5e-2, "{l2}");
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.json");
    let out = trispectral(&["forward", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error["));

    let q = write_potential(dir.path(), "q.json", |x| x);
    let out = trispectral(&["forward", "--input", &q, "--num-eigenvalues", "0"]);
    assert_eq!(out.status.code(), Some(2));

    // even about the midpoint: the half-interval spectra coincide
    let sym = write_potential(dir.path(), "sym.json", |x| {
        (x - std::f64::consts::FRAC_PI_2).powi(2)
    });
    let out = trispectral(
        &[
            &["roundtrip", "--input", &sym, "--missing-nu1", "1"][..],
            &SMALL,
        ]
        .concat(),
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
