use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn osptba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osptba"))
        .args(args)
        .env_remove("OSPTBA_TOL")
        .env_remove("OSPTBA_DENSE_CAP")
        .env_remove("OSPTBA_TBA_TOL")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad report ({e}): {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn tableaux_count() {
    let out = osptba(&["tableaux", "--s", "2", "--shape", "1,1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["data"]["count"], 15);
    assert_eq!(r["pass"], true);
}

#[test]
fn skew_tableaux_listed() {
    let out = osptba(&["tableaux", "--s", "1", "--shape", "2,1", "--inner", "1", "--list"]);
    let r = report(&out);
    let n = r["data"]["count"].as_u64().unwrap();
    assert_eq!(r["data"]["tableaux"].as_array().unwrap().len() as u64, n);
}

#[test]
fn identity_suite_passes_and_is_stable() {
    let args = ["check-identities", "--s", "1", "--suite", "all", "--seed", "42", "--no-timings"];
    let a = osptba(&args);
    assert_eq!(a.status.code(), Some(0));
    let r = report(&a);
    assert_eq!(r["seed"], 42);
    assert_eq!(r["data"]["points"].as_array().unwrap().len(), 10);
    let names: Vec<&str> = r["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for want in ["jacobi-trudi", "vanishing", "duality", "hirota", "tsystem", "ysystem", "poles"] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }
    let b = osptba(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn every_check_carries_bound_and_provenance() {
    let r = report(&osptba(&["check-identities", "--s", "2", "--suite", "duality"]));
    for c in r["checks"].as_array().unwrap() {
        assert!(c["provenance"].is_string());
        assert!(c["bound"].is_number());
        assert!(c["pass"].is_boolean());
    }
    assert!(r["timings"]["total_seconds"].is_number());
}

#[test]
fn impossible_tolerance_fails_with_code_1() {
    let out = osptba(&["check-identities", "--suite", "hirota", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["pass"], false);
}

#[test]
fn usage_errors_give_code_2() {
    assert_eq!(osptba(&["tableaux", "--shape", "1,2"]).status.code(), Some(2));
    assert_eq!(osptba(&["solve-bae", "--N", "3"]).status.code(), Some(2));
    assert_eq!(osptba(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(osptba(&["tableaux"]).status.code(), Some(2));
    assert_eq!(osptba(&["suite", "--only", "15"]).status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"s": 2, "shape": "1"}"#).unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(report(&osptba(&["--config", c, "tableaux"]))["data"]["count"], 5);
    // flags win over the file
    assert_eq!(report(&osptba(&["--config", c, "tableaux", "--shape", "2"]))["data"]["count"], 10);
}

#[test]
fn bethe_state_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let st = dir.path().join("state.json");
    let out = osptba(&["solve-bae", "--s", "1", "--N", "4", "--u", "-0.05", "--state-out", st.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let j = read_json(&st);
    assert_eq!(j["N"], 4);
    assert_eq!(j["M"], serde_json::json!([4]));
    assert_eq!(j["roots"][0].as_array().unwrap().len(), 4);
    let again = osptba(&["solve-bae", "--seed-file", st.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    let poles = osptba(&["check-identities", "--suite", "poles", "--state", st.to_str().unwrap()]);
    assert_eq!(poles.status.code(), Some(0));
}

#[test]
fn strip_scan_reports_counts() {
    let r = report(&osptba(&["scan-strip", "--a", "1", "--m", "1"]));
    assert_eq!(r["pass"], true);
    assert!(r["data"]["raw_count"].is_i64());
}

#[test]
fn qtm_matches_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("q.bin");
    let out = osptba(&[
        "verify-qtm", "--s", "1", "--N", "2", "--u", "-0.05", "--v", "0", "--v", "0.2,-0.1", "--dump",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let bytes = std::fs::read(&dump).unwrap();
    let rows = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    assert_eq!((rows, cols), (9, 9));
    assert_eq!(bytes.len(), 16 + 9 * 9 * 16);
    let r = report(&out);
    assert_eq!(r["data"]["points"].as_array().unwrap().len(), 2);
}

#[test]
fn dense_cap_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_osptba"))
        .args(["verify-qtm", "--N", "4"])
        .env("OSPTBA_DENSE_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn tba_free_energy_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("y.csv");
    let out = osptba(&["--csv", csv_path.to_str().unwrap(), "solve-tba", "--s", "1", "--J", "-1", "--beta", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let f = r["data"]["thermo"]["free_energy"].as_f64().unwrap();
    let e0 = r["data"]["thermo"]["ground_energy"].as_f64().unwrap();
    // entropy per site is at most log 3
    assert!(f < e0 && f > e0 - 3f64.ln(), "F = {f}");
    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 13);
    assert_eq!(rdr.records().count(), 801);
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("f.csv");
    let out = osptba(&[
        "--csv", csv_path.to_str().unwrap(), "sweep", "--beta-list", "0.5,1", "--vmax", "12", "--step", "0.1",
        "--Mmax", "6",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<_> = csv::Reader::from_path(&csv_path).unwrap().records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    let f: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(f[0] < f[1]);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    let out = osptba(&["--out", p.to_str().unwrap(), "suite", "--only", "1,9"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r = read_json(&p);
    assert_eq!(r["data"]["passed"], 2);
    assert_eq!(r["seed"], 42);
}
