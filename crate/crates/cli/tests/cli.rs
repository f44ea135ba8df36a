use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gp")).args(args).output().expect("gp runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// The manifest lists every other file in the directory, and nothing else.
fn assert_manifest_complete(dir: &Path) -> Value {
    let m = json(&dir.join("manifest.json"));
    let listed: BTreeSet<String> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let on_disk: BTreeSet<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    assert_eq!(listed, on_disk);
    assert_eq!(m["seed"], 0);
    m
}

fn write_profile(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("p.json");
    let out = gp(&["soliton", "--tol", "1e-12", "--out", s(&p)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    p
}

const SMALL_SWEEP: &str = "potential = power_well h0=1 p=2\nL = 8\nn = 128\na_schedule = geom:0.3,0.6,4\n";

#[test]
fn soliton_writes_the_identity_table() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_profile(dir.path());
    let v = json(&p);
    let id = &v["identities"];
    assert!(id["kinetic_rel_err"].as_f64().unwrap() < 1e-6);
    assert!(id["quartic_rel_err"].as_f64().unwrap() < 1e-6);
    assert!((v["critical_coupling"].as_f64().unwrap() - 11.7008965).abs() < 1e-6);
    assert!(v["moment_1"].as_f64().unwrap() > 0.0);
    assert!(v["moment_2"].as_f64().unwrap() > 0.0);
    let n = v["r"].as_array().unwrap().len();
    assert_eq!(v["q"].as_array().unwrap().len(), n);
    assert_eq!(v["q_prime"].as_array().unwrap().len(), n);
    let m = assert_manifest_complete(dir.path());
    assert_eq!(m["status"], "ok");
    assert_eq!(m["command"], "soliton");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.cfg");
    assert_eq!(code(&gp(&["sweep", "--config", s(&missing)])), 2);

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, format!("{SMALL_SWEEP}colour = red\n")).unwrap();
    let out = gp(&["sweep", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));

    // no --out and no out_dir
    fs::write(&cfg, SMALL_SWEEP).unwrap();
    assert_eq!(code(&gp(&["sweep", "--config", s(&cfg)])), 2);

    let out = gp(&[
        "blowup",
        "--config",
        s(&cfg),
        "--profile",
        s(&dir.path().join("nope.json")),
        "--out",
        s(&dir.path().join("b")),
    ]);
    assert_eq!(code(&out), 2);

    let junk = dir.path().join("junk.gpf");
    fs::write(&junk, b"not a field").unwrap();
    assert_eq!(code(&gp(&["energy", "--field", s(&junk), "--potential", "sinc", "--a", "1"])), 2);
    assert_eq!(code(&gp(&["check-v1", "--potential", "well", "--L", "8", "--n", "32"])), 2);
}

#[test]
fn blowup_with_too_few_resolved_entries() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path());
    let cfg = dir.path().join("s.cfg");
    fs::write(&cfg, "potential = power_well h0=1 p=2\nL = 8\nn = 64\na_schedule = frac:0.5,0.7\n").unwrap();
    let out_dir = dir.path().join("report");
    let out = gp(&["blowup", "--config", s(&cfg), "--profile", s(&profile), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 3);
    assert!(!out_dir.join("fit.json").exists());
    assert!(out_dir.join("entries.csv").exists());
    let m = assert_manifest_complete(&out_dir);
    assert_eq!(m["status"], "insufficient_data");
}

#[test]
fn blowup_fits_a_harmonic_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path());
    let cfg = dir.path().join("s.cfg");
    fs::write(&cfg, SMALL_SWEEP).unwrap();
    let out_dir = dir.path().join("report");
    let out = gp(&["blowup", "--config", s(&cfg), "--profile", s(&profile), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = assert_manifest_complete(&out_dir);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["a_schedule"], "geom:0.3,0.6,4");
    assert_eq!(m["grid"]["n"], 128);

    let csv = fs::read_to_string(out_dir.join("entries.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "a,E,eps,L2_dist,H1_dist,resolved,converged");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let eps: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(eps.windows(2).all(|w| w[1] < w[0]));

    let fit = json(&out_dir.join("fit.json"));
    assert_eq!(fit["predicted_exponent"], 0.25);
    assert!(fit["window"].as_array().unwrap().len() >= 3);
    let exponent = fit["exponent"].as_f64().unwrap();
    assert!((0.2..0.3).contains(&exponent), "{exponent}");
    for k in fit["window"].as_array().unwrap() {
        assert!(out_dir.join(format!("aligned_{:03}.gpf", k.as_u64().unwrap())).exists());
    }
}

#[test]
fn sweep_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    fs::write(&cfg, "potential = sinc\nL = 8\nn = 64\na_schedule = frac:0.5,0.8\ntol = 1e-8\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = gp(&["sweep", "--config", s(&cfg), "--out", s(d)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let m = assert_manifest_complete(&a);
    for name in m["outputs"].as_array().unwrap() {
        let name = name.as_str().unwrap();
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let csv = fs::read_to_string(a.join("entries.csv")).unwrap();
    assert!(csv.starts_with("index,a,a_ratio,energy,"));
    assert_eq!(csv.lines().count(), 3);
    let summary = json(&a.join("summary.json"));
    assert!(summary["lambda0"].as_f64().unwrap() < 0.0);
    assert!(summary["existence_onset"].as_f64().unwrap() > 0.0);
}

#[test]
fn minimize_then_inspect_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let result = dir.path().join("result.json");
    let out = gp(&[
        "minimize",
        "--potential",
        "lattice s=0.3 period=2",
        "--a",
        "6",
        "--L",
        "8",
        "--n",
        "64",
        "--out",
        s(&result),
        "--field",
        "u.gpf",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&result);
    assert_eq!(r["converged"], true);
    assert_eq!(r["init_kind"], "gaussian");
    let m = assert_manifest_complete(dir.path());
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);

    let field = dir.path().join("u.gpf");
    let out = gp(&["energy", "--field", s(&field), "--potential", "lattice s=0.3 period=2", "--a", "6"]);
    assert_eq!(code(&out), 0);
    let e: Value = serde_json::from_slice(&out.stdout).unwrap();
    let total = e["total"].as_f64().unwrap();
    assert!((total - r["energy"]["total"].as_f64().unwrap()).abs() < 1e-12);

    let out = gp(&["check-v2", "--potential", "lattice s=0.3 period=2", "--field", s(&field), "--eps", "0.1"]);
    assert_eq!(code(&out), 0);
    let v2: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v2["attained_interior"], true);

    // warm start from the stored minimizer converges at once
    let again = dir.path().join("again.json");
    let out = gp(&[
        "minimize", "--potential", "lattice s=0.3 period=2", "--a", "6", "--L", "8", "--n", "64",
        "--init", s(&field), "--out", s(&again),
    ]);
    assert_eq!(code(&out), 0);
    let r2 = json(&again);
    assert_eq!(r2["init_kind"], "from_file");
    assert!(r2["iters"].as_u64().unwrap() <= 2);
}

#[test]
fn minimize_reports_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let result = dir.path().join("result.json");
    let out = gp(&[
        "minimize", "--potential", "sinc", "--a", "10", "--L", "8", "--n", "64", "--max-iters", "1", "--out",
        s(&result),
    ]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&result)["converged"], false);
    let m = assert_manifest_complete(dir.path());
    assert_eq!(m["status"], "non_convergence");
}

#[test]
fn potential_from_a_field_file() {
    let dir = tempfile::tempdir().unwrap();
    // a minimizer at a = 0 in a harmonic well is a fine field to reuse as V
    let result = dir.path().join("r.json");
    let out = gp(&[
        "minimize", "--potential", "power_well h0=1 p=2", "--a", "0", "--L", "8", "--n", "32", "--out",
        s(&result), "--field", "v.gpf",
    ]);
    assert_eq!(code(&out), 0);
    let v = dir.path().join("v.gpf");
    let out = gp(&["energy", "--field", s(&v), "--potential", s(&v), "--a", "0"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let e: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(e["potential"].as_f64().unwrap() > 0.0);
}

#[test]
fn flat_potential_fails_v1() {
    let out = gp(&["check-v1", "--potential", "zero", "--L", "8", "--n", "32"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passes_v1"], false);
    assert!(v["v1_margin"].as_f64().unwrap().abs() < 1e-6);

    let out = gp(&["check-v1", "--potential", "power_well h0=1 p=2", "--L", "8", "--n", "64"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["lambda0"].as_f64().unwrap() - 2.0).abs() < 1e-3);
}
