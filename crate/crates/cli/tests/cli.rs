use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn relaygame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaygame")).args(args).output().expect("binary runs")
}

fn gen(dir: &Path, family: &str, seed: &str, extra: &[&str]) -> String {
    let path = dir.join(format!("{family}-{seed}.json"));
    let p = path.to_str().unwrap().to_string();
    let mut args = vec!["gen", "--family", family, "--seed", seed, "--out", &p];
    args.extend_from_slice(extra);
    let o = relaygame(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    p
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn gen_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = relaygame(&["gen", "--family", "random-complex", "--seed", "5"]);
    let b = relaygame(&["gen", "--family", "random-complex", "--seed", "5"]);
    let c = relaygame(&["gen", "--family", "random-complex", "--seed", "6"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let p = gen(dir.path(), "random-real-pathloss", "7", &[]);
    assert!(relaygame(&["rates", "--scenario", &p]).status.success());
}

#[test]
fn every_family_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for fam in [
        "random-complex",
        "random-real-pathloss",
        "fig2-canonical",
        "fig4-canonical",
        "fig5-canonical",
        "fig6-canonical",
        "fig7-canonical",
    ] {
        let p = gen(dir.path(), fam, "3", &[]);
        let o = relaygame(&["rates", "--scenario", &p, "--band", "0"]);
        let v = json(&o);
        assert_eq!(v["schema_version"], 1);
        assert!(v["r1"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn analytic_ne_on_fig4_has_three_points() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "fig4-canonical", "0", &[]);
    let v = json(&relaygame(&["ne", "--analytic", "--scenario", &p]));
    assert_eq!(v["equilibria"]["points"].as_array().unwrap().len(), 3);
    assert!(v["verification"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn cournot_csv_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "fig4-canonical", "0", &[]);
    let o = relaygame(&["cournot", "--scenario", &p, "--start", "0.1,0.9", "--max-iter", "1000"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "iteration,theta1_0,theta1_1,theta2_0,theta2_1,u1,u2");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&first[..5], &["0", "0.1", "0.9", "0.9", "0.1"]);
    assert!(lines.count() >= 1);
}

#[test]
fn output_is_bit_identical_and_twelve_digits() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "fig7-canonical", "0", &[]);
    let args = ["sweep-nu", "--scenario", &p, "--n", "11"];
    let a = relaygame(&args);
    let b = relaygame(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
    let text = String::from_utf8(a.stdout).unwrap();
    for cell in text.lines().skip(1).flat_map(|l| l.split(',')) {
        if let Ok(x) = cell.parse::<f64>() {
            let digits = cell.trim_start_matches('-').chars().filter(|c| c.is_ascii_digit()).collect::<String>();
            assert!(digits.trim_start_matches('0').len() <= 12, "{cell} {x}");
        }
    }
    let summary: Value = serde_json::from_slice(&a.stderr).unwrap();
    assert_eq!(summary["argmax"]["leader"][0].as_f64().unwrap(), 1.0);
}

#[test]
fn sweep_summary_to_file_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "fig5-canonical", "0", &[]);
    let summary = dir.path().join("summary.json");
    let csv = dir.path().join("sweep.csv");
    let o = relaygame(&[
        "sweep-gain",
        "--scenario",
        &p,
        "--n",
        "5",
        "--out",
        csv.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 6);
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["points"], 5);
    let v = json(&relaygame(&["sweep-gain", "--scenario", &p, "--n", "3", "--format", "json"]));
    assert_eq!(v["points"].as_array().unwrap().len(), 3);
}

#[test]
fn position_dominance_and_basin_run() {
    let dir = tempfile::tempdir().unwrap();
    let p6 = gen(dir.path(), "fig6-canonical", "0", &[]);
    let o = relaygame(&["sweep-position", "--scenario", &p6, "--nx", "3", "--ny", "2", "--xmin", "-5", "--xmax", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 7);
    let p2 = gen(dir.path(), "fig2-canonical", "0", &[]);
    let o = relaygame(&["dominance-map", "--scenario", &p2, "--nx", "4", "--ny", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x,y,df,ef,af,label");
    assert_eq!(text.lines().count(), 13);
    let p4 = gen(dir.path(), "fig4-canonical", "0", &[]);
    let v = json(&relaygame(&["basin", "--scenario", &p4, "--resolution", "5", "--format", "json"]));
    assert_eq!(v["cells"].as_array().unwrap().len(), 25);
}

#[test]
fn af_gain_reports_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "random-complex", "11", &["--protocol", "af"]);
    let v = json(&relaygame(&["af-gain", "--scenario", &p, "--user", "2"]));
    let sol = &v["solution"];
    let best = sol["rate"].as_f64().unwrap();
    for c in sol["candidates"].as_array().unwrap() {
        assert!(c[1].as_f64().unwrap() <= best);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"p1": -1, "p2": 1, "bands": [{"h11": 1, "h12": 0, "h21": 0, "h22": 1, "h1r": 0, "h2r": 0, "hr1": 0, "hr2": 0,
            "noise_d1": 1, "noise_d2": 1, "noise_r": 1, "relay_power": 0, "protocol": {"direct": null}}]}"#,
    )
    .unwrap();
    let o = relaygame(&["rates", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert_eq!(relaygame(&["gen", "--family", "nope"]).status.code(), Some(1));
    assert_eq!(relaygame(&["frobnicate"]).status.code(), Some(1));
    let missing = relaygame(&["rates", "--scenario", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    let p = gen(dir.path(), "random-complex", "1", &["--protocol", "df"]);
    let o = relaygame(&["ne", "--analytic", "--scenario", &p]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(relaygame(&["--help"]).status.code(), Some(0));
}
