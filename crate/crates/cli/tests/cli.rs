use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn loolsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loolsim"))
        .args(args)
        .env_remove("LOOLSIM_SEED")
        .output()
        .expect("binary runs")
}

fn json_of(args: &[&str]) -> Value {
    let out = loolsim(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn eraser_endpoints() {
    let v = json_of(&["eraser", "--l", "3", "--profile", "gauss", "--sigma", "1.0"]);
    let taus = v["tau_ps"].as_array().unwrap();
    let sym = v["symmetric"].as_array().unwrap();
    let asym = v["antisymmetric"].as_array().unwrap();
    let mid = taus.len() / 2;
    assert_eq!(f(&taus[mid]), 0.0);
    assert!(f(&sym[mid]).abs() < 1e-12);
    assert!((f(&asym[mid]) - 0.5).abs() < 1e-12);
    // the default window reaches |τ| = 4/σ, where the Gaussian overlap is e^-8
    for end in [0, taus.len() - 1] {
        assert!((f(&sym[end]) - 0.25).abs() < 1e-3);
        assert!((f(&asym[end]) - 0.25).abs() < 1e-3);
    }
    assert_eq!(f(&v["prefactor"]), 0.25);
    assert_eq!(f(&v["metadata"]["coincidence_window_s"]), 0.2e-9);
}

#[test]
fn eraser_radial_far_tail_is_flat() {
    let v = json_of(&[
        "eraser",
        "--p",
        "1",
        "--tau-min",
        "20",
        "--tau-max",
        "30",
        "--points",
        "5",
    ]);
    assert_eq!(v["subspace"], "p=1");
    for x in v["symmetric"]
        .as_array()
        .unwrap()
        .iter()
        .chain(v["antisymmetric"].as_array().unwrap())
    {
        assert!((f(x) - 0.25).abs() < 1e-12);
    }
}

#[test]
fn witness_on_ideal_state() {
    let v = json_of(&[
        "witness", "--state", "ideal", "--counts", "100000", "--seed", "7",
    ]);
    assert!((f(&v["estimate"]["fidelity"]) - 1.0).abs() < 0.005);
    assert_eq!(v["records"].as_array().unwrap().len(), 12);
}

#[test]
fn witness_on_mixtures() {
    let white = json_of(&[
        "witness", "--state", "white", "--counts", "200000", "--seed", "1",
    ]);
    assert!((f(&white["estimate"]["fidelity"]) - 0.25).abs() < 0.01);
    let mixed = json_of(&[
        "witness", "--state", "mixed", "--counts", "200000", "--seed", "1",
    ]);
    assert!((f(&mixed["estimate"]["fidelity"]) - 0.5).abs() < 0.01);
}

#[test]
#[allow(clippy::approx_constant)] // the documented example angle
fn lift_reports_reference_comparison() {
    let v = json_of(&["lift", "--theta", "0.7854", "--r", "0.5"]);
    let reference = v["reference"].as_array().unwrap();
    let (c, s) = (0.7854f64.cos(), 0.7854f64.sin());
    let r2 = 2.0f64.sqrt();
    let expect = [(c, 0.0), (c, -s), (0.0, s), (-c, s)];
    for (z, (re, im)) in reference.iter().zip(expect) {
        assert!((f(&z[0]) - re / r2).abs() < 1e-12);
        assert!((f(&z[1]) - im / r2).abs() < 1e-12);
    }
    // a unitary keeps the two-photon input's norm, the quoted vector does not
    assert!((f(&v["computed_norm_squared"]) - 2.0).abs() < 1e-12);
    assert!((f(&v["reference_norm_squared"]) - 1.5).abs() < 1e-3);
    assert!(f(&v["max_deviation"]) > 0.1);
}

#[test]
fn schmidt_number_of_gaussian_spectrum() {
    let v = json_of(&["schmidt", "--sigma", "1", "--phase-matching", "3"]);
    let k = f(&v["schmidt_number"]);
    assert!((k - f(&v["analytic_schmidt_number"])).abs() < 1e-4, "{k}");
    assert!((k - 5.0 / 3.0).abs() < 1e-4);
}

#[test]
fn tomo_crosstalk_state() {
    let v = json_of(&[
        "tomo",
        "--state",
        "crosstalk",
        "--eta",
        "0.9",
        "--resamples",
        "100",
        "--seed",
        "3",
    ]);
    // eta |chi><chi| + (1 - eta) rho_c has overlap eta + (1 - eta)/2
    assert!((f(&v["exact_fidelity"]) - 0.95).abs() < 1e-12);
    assert!((f(&v["report"]["fidelity"]) - 0.95).abs() < 0.01);
}

#[test]
fn identical_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = loolsim(&[
            "tomo",
            "--counts",
            "5000",
            "--seed",
            "11",
            "--resamples",
            "50",
            "--format",
            "csv",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn seed_falls_back_to_environment() {
    let with_env = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_loolsim"))
            .args([
                "witness",
                "--counts",
                "1000",
                "--resamples",
                "10",
                "--state",
                "white",
            ])
            .env("LOOLSIM_SEED", seed)
            .output()
            .unwrap()
            .stdout
    };
    let flag = loolsim(&[
        "witness",
        "--counts",
        "1000",
        "--resamples",
        "10",
        "--state",
        "white",
        "--seed",
        "42",
    ]);
    assert_eq!(with_env("42"), flag.stdout);
    assert_ne!(with_env("43"), flag.stdout);
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn csv_outputs_have_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str, usize); 4] = [
        (&["hom-scan", "--points", "11"], "tau_ps", 11),
        (&["eraser", "--points", "11"], "tau_ps", 11),
        (
            &["witness", "--counts", "1000", "--resamples", "10"],
            "basis",
            12,
        ),
        (&["lift"], "mode", 4),
    ];
    for (k, (args, first, rows)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("{k}.csv"));
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--format", "csv", "--out", path.to_str().unwrap()]);
        let out = loolsim(&full);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let (header, body) = read_csv(&path);
        assert_eq!(header[0], *first);
        assert_eq!(body.len(), *rows);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(loolsim(&["witness", "--bogus"]).status.code(), Some(2));
    assert_eq!(loolsim(&["lift", "--r", "1.5"]).status.code(), Some(2));
    assert_eq!(
        loolsim(&["eraser", "--l", "2", "--p", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        loolsim(&["hom-scan", "--sigma", "-1"]).status.code(),
        Some(2)
    );
    // l = 0 is the Gaussian mode itself, not a valid excited label
    let out = loolsim(&["eraser", "--l", "0"]);
    assert_eq!(out.status.code(), Some(2));
    // parameters that parse but overflow the model
    let out = loolsim(&["hom-scan", "--sigma", "1e-300"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite"));
    assert_eq!(
        loolsim(&["schmidt", "--sigma", "1e-300"]).status.code(),
        Some(3)
    );
}
