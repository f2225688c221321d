use std::process::{Command, Output};

fn mccs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mccs")).args(args).output().expect("run mccs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn simulate_record_matches_golden() {
    let out = mccs(&["simulate", "--K", "3", "--N", "2", "--M", "1", "--demand", "1,1,2", "--record", "--seed", "3"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), golden("simulate_k3_n2_m1_seed3.txt"));
}

#[test]
fn table_matches_golden() {
    let out = mccs(&["--format", "csv", "table", "--K", "7", "--N", "10"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), golden("table_k7_n10.csv"));
}

#[test]
fn place_prints_three_decimals() {
    let out = mccs(&["place", "--K", "7", "--N", "10", "--M", "2"]);
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.split_whitespace().eq(["a_1", "0.086"])), "{text}");
    assert!(text.lines().any(|l| l.split_whitespace().eq(["a_2", "0.019"])), "{text}");
}

#[test]
fn exact_json_rates() {
    let out = mccs(&["--format", "json", "rate", "--K", "3", "--N", "2", "--M", "1", "--enumerate"]);
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = &value[0];
    assert_eq!(row["expected_rate"], serde_json::json!({"num": 5, "den": 8}));
    assert_eq!(row["enumerated_rate"], row["expected_rate"]);
}

#[test]
fn invalid_instance_exits_2() {
    let out = mccs(&["place", "--K", "3", "--N", "2", "--M", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.matches("invalid instance").count(), 1, "{err}");
}

#[test]
fn verify_exit_codes() {
    let grid = ["verify", "--grid", "K=1..3 N=1..2 M=0..2"];
    assert_eq!(mccs(&grid).status.code(), Some(0));
    let mut faulty = grid.to_vec();
    faulty.push("--inject-fault");
    let out = mccs(&faulty);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL feasibility_injected_fault"));
}

#[test]
fn out_flag_writes_file() {
    let path = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("place.csv");
    let out = mccs(&["--format", "csv", "--out", path.to_str().unwrap(), "place", "--K", "2", "--N", "2", "--M", "1"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("N,K,M"), "{text}");
}
