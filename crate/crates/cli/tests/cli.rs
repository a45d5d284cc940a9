use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn rsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsp"))
        .args(args)
        .output()
        .expect("failed to launch rsp")
}

fn ok_json(args: &[&str]) -> Value {
    let out = rsp(args);
    assert!(
        out.status.success(),
        "rsp {args:?} failed\nstderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stderr.is_empty());
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn exact_on_epr_channel_gives_one_half() {
    let v = ok_json(&["exact", "--target", "0.5,0.5,0.5,0.5"]);
    assert_eq!(v["mode"], "exact");
    assert!((f(&v["results"]["total_success"]) - 0.5).abs() < 1e-10);
    for b in v["results"]["branches"].as_array().unwrap() {
        assert!((f(&b["probability"]) - 0.25).abs() < 1e-10);
    }
    assert!((f(&v["inputs"]["channel"]["a"]) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
}

#[test]
fn exact_on_partial_channel_with_phased_target() {
    let v = ok_json(&[
        "exact", "--target", "0.5,0+0.5j,0.5,0+0.5j", "--a", "0.6", "--c", "0.6",
    ]);
    assert!((f(&v["results"]["total_success"]) - 0.2592).abs() < 1e-10);
    assert_eq!(v["inputs"]["target"][1], serde_json::json!([0.0, 0.5]));
    let per: Vec<f64> = v["results"]["branches"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| f(&b["success"]))
        .collect();
    assert_eq!(per[0], 0.0);
    assert!((per[1] - 0.1296).abs() < 1e-10);
    assert_eq!(per[2], 0.0);
    assert!((per[3] - 0.1296).abs() < 1e-10);
}

#[test]
fn forced_run_traces() {
    let v = ok_json(&["run", "--target", "0.6,0.8j,0,0", "--forced-outcome", "phi-perp"]);
    let r = &v["results"];
    assert_eq!(r["success"], true);
    assert_eq!(r["aux_outcome"], 0);
    assert_eq!(r["message_bits"], 1);
    assert!((f(&r["fidelity_to_target"]) - 1.0).abs() < 1e-10);
    assert!((f(&r["alice_probability"]) - 0.25).abs() < 1e-10);

    let v = ok_json(&["run", "--target", "0.5,0.5,0.5,0.5", "--forced-outcome", "psi"]);
    assert_eq!(v["results"]["success"], false);
    assert_eq!(v["results"]["corrected"], false);
    assert_eq!(v["results"]["aux_outcome"], Value::Null);

    let v = ok_json(&[
        "run", "--target", "0.5,0.5,0.5,0.5", "--a", "0.6", "--c", "0.6",
        "--forced-outcome", "psi-perp", "--forced-aux", "0",
    ]);
    assert!((f(&v["results"]["joint_probability"]) - 0.1296).abs() < 1e-10);
}

#[test]
fn forcing_an_impossible_aux_outcome_fails_cleanly() {
    let out = rsp(&[
        "run", "--target", "1,0,0,0", "--forced-outcome", "phi-perp", "--forced-aux", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("probability"));
}

#[test]
fn sweep_csv_has_64_monotone_rows() {
    let out = rsp(&["sweep", "--step", "0.1", "--format", "csv"]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header = reader.headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["a", "c", "closed_form", "mc_rate", "mc_stderr", "trials", "seed"]
    );
    let rows: Vec<(f64, f64, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            assert_eq!(&r[3], "");
            (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 64);
    for &(a, c, s) in &rows {
        assert!((s - 2.0 * (a * c).powi(2)).abs() < 1e-12);
    }
    for x in &rows {
        for y in &rows {
            if x.0 <= y.0 && x.1 <= y.1 {
                assert!(x.2 <= y.2);
            }
        }
    }
}

#[test]
fn sweep_with_sampling() {
    let out = rsp(&[
        "sweep", "--step", "0.35", "--target", "0.5,0.5,0.5,0.5", "--trials", "2000", "--seed", "5",
    ]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let closed: f64 = r[2].parse().unwrap();
        let rate: f64 = r[3].parse().unwrap();
        let se = (closed * (1.0 - closed) / 2000.0).sqrt();
        assert!((rate - closed).abs() <= 5.0 * se + 1e-12, "{r:?}");
        assert_eq!(&r[5], "2000");
    }
}

#[test]
fn simulate_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("one.json");
    let p2 = dir.path().join("two.json");
    for p in [&p1, &p2] {
        let out = rsp(&[
            "simulate", "--target", "0.5,0.5,0.5,0.5", "--trials", "100000", "--seed", "42",
            "--out", p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    let (one, two) = (fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    assert_eq!(one, two);
    let v: Value = serde_json::from_slice(&one).unwrap();
    let rate = f(&v["results"]["estimated_rate"]);
    assert!((rate - 0.5).abs() <= 5.0 * (0.25f64 / 1e5).sqrt());
    assert_eq!(v["results"]["trials"], 100000);
}

#[test]
fn json_reports_round_trip_exactly() {
    let cases: [&[&str]; 6] = [
        &["exact", "--target", "0.5,0+0.5j,0.5,0+0.5j", "--a", "0.6", "--c", "0.3"],
        &["run", "--target", "0.5,0.3+0.4j,0.5,-0.3-0.4j", "--seed", "17", "--a", "0.4"],
        &["simulate", "--target", "0.5,0.5,0.5,0.5", "--trials", "500", "--seed", "3"],
        &["sweep", "--step", "0.2", "--format", "json"],
        &["validate", "--target", "0.5,0+0.5j,0.5,0.5"],
        &["validate", "--target", "1,0,0,0"],
    ];
    for args in cases {
        let out = rsp(args);
        let text = String::from_utf8(out.stdout).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        let again = rsp_cli::report::to_json_text(&v);
        assert_eq!(text, again, "{args:?}");
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["inputs", "mode", "results"]);
    }
}

#[test]
fn validate_reports_each_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.txt");
    fs::write(&good, "# phased target\n0.5, 0+0.5j\n0.5, 0+0.5j\n").unwrap();
    let v = ok_json(&["validate", good.to_str().unwrap()]);
    assert_eq!(v["results"]["valid"], true);
    assert_eq!(v["results"]["constraints"].as_array().unwrap().len(), 4);

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "0.5 0+0.5j 0.5 0.5\n").unwrap();
    let out = rsp(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"]["valid"], false);
    let failing: Vec<&str> = v["results"]["constraints"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["satisfied"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["beta_conj_delta_real"]);
    assert!(!out.stderr.is_empty());
}

#[test]
fn usage_errors_exit_with_status_two() {
    for args in [
        &["exact", "--target", "1,0,0,0", "--a", "0.9"][..],
        &["exact", "--target", "0.5,0+0.5j,0.5,0.5"],
        &["exact", "--target", "1,0,0,zz"],
        &["exact"],
        &["exact", "--target", "1,0,0,0", "--frobnicate"],
        &["teleport"],
    ] {
        let out = rsp(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn io_failures_exit_with_status_one() {
    let out = rsp(&["validate", "/nonexistent/target.txt"]);
    assert_eq!(out.status.code(), Some(1));
    let out = rsp(&[
        "exact", "--target", "1,0,0,0", "--out", "/nonexistent/dir/report.json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/dir/report.json"));
}

#[test]
fn help_exits_zero() {
    let out = rsp(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("simulate"));
}
