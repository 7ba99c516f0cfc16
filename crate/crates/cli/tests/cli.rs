use std::process::{Command, Output};

fn hlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlab")).args(args).output().expect("spawn hlab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(args: &[&str]) -> serde_json::Value {
    let o = hlab(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn analyze_torus_json() {
    let v = json(&["analyze", "torus2", "--no-feasibility", "--format", "json"]);
    assert_eq!(v["betti"]["b2"], "6");
    assert_eq!(v["frolicher"]["E1_degenerate"], true);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn analyze_one_section_per_h() {
    let v = json(&["analyze", "torus2", "--h", "2", "--h", "-1/3", "--no-feasibility", "--format", "json"]);
    let hs: Vec<&str> = v["h_sections"].as_array().unwrap().iter().map(|s| s["h"].as_str().unwrap()).collect();
    assert_eq!(hs, ["2", "-1/3"]);
}

#[test]
fn torus_identities_all_pass() {
    let o = hlab(&["identities", "torus2", "--metric", "identity", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["status"] == "pass"), "{rows:?}");
    assert!(rows.iter().any(|r| r["id"] == "PROPORTION"));
}

#[test]
fn iwasawa_proportion_negative_control() {
    let text = stdout(&hlab(&["identities", "iwasawa", "--id", "PROPORTION"]));
    assert!(text.contains("skipped (non-Kähler)"), "{text}");
    let o = hlab(&["identities", "iwasawa", "--id", "PROPORTION", "--expect-violation"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("violated (expected)"));
}

#[test]
fn bad_input_exits_one() {
    assert_eq!(hlab(&["identities", "torus2", "--id", "NOPE"]).status.code(), Some(1));
    assert_eq!(hlab(&["analyze", "no_such_model"]).status.code(), Some(1));
    assert_eq!(hlab(&["analyze", "torus2", "--h", "0"]).status.code(), Some(1));
    assert_eq!(hlab(&["sweep", "iwasawa_drift", "--no-feasibility"]).status.code(), Some(1));
}

#[test]
fn sweeps() {
    let v = json(&["sweep", "constant", "--grid", "1/2:2", "--no-feasibility", "--format", "json"]);
    assert_eq!(v["all_rows_identical"], true);
    let v = json(&["sweep", "iwasawa", "--grid", "1/8:8", "--no-feasibility", "--format", "json"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 17);
}

#[test]
fn injected_fault_exits_two() {
    let o = hlab(&["sweep", "torus2", "--grid", "1/8:2", "--no-feasibility", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FALSIFIED"));
}

#[test]
fn output_is_deterministic() {
    let args = ["analyze", "iwasawa", "--h", "-1/3", "--seed", "3", "--format", "json"];
    assert_eq!(hlab(&args).stdout, hlab(&args).stdout);
}

#[test]
fn metric_file_and_out_flag() {
    let dir = std::env::temp_dir().join(format!("hlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let metric = dir.join("skew.metric");
    std::fs::write(&metric, "# skew\nmetric g22 = 2\nmetric g33 = 3\nmetric g13 = 1/2+1/3i\n").unwrap();
    let out = dir.join("cones.json");
    let o = hlab(&[
        "cones",
        "iwasawa",
        "--metric",
        metric.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["metric"][0][2], "1/2+1/3 i");
    std::fs::remove_dir_all(&dir).ok();
}
