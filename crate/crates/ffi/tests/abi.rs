use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mccs_ffi::*;

fn frac(num: i64, den: i64) -> MccsFraction {
    MccsFraction { num, den }
}

fn instance(files: usize, users: usize, m: &str) -> *mut MccsInstance {
    let text = CString::new(m).unwrap();
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { mccs_instance_parse(files, users, text.as_ptr(), &mut inst) }, MccsStatus::Ok);
    inst
}

fn last_error() -> String {
    let p = mccs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn placement_for_k7_n10_m2() {
    let inst = instance(10, 7, "2");
    let mut a = ptr::null_mut();
    unsafe {
        assert_eq!(mccs_optimal_placement(inst, &mut a), MccsStatus::Ok);
        assert_eq!(mccs_placement_len(a), 8);
        let mut out = frac(0, 0);
        let expected = [frac(0, 1), frac(3, 35), frac(2, 105), frac(0, 1)];
        for (l, want) in expected.iter().enumerate() {
            assert_eq!(mccs_placement_entry(a, l, &mut out), MccsStatus::Ok);
            assert_eq!(out, *want, "a_{l}");
        }
        assert_eq!(mccs_placement_entry(a, 8, &mut out), MccsStatus::InvalidArgument);

        let mut rate = frac(0, 0);
        let mut min = frac(0, 0);
        assert_eq!(mccs_expected_rate(inst, a, &mut rate), MccsStatus::Ok);
        assert_eq!(mccs_minimum_expected_rate(inst, &mut min), MccsStatus::Ok);
        assert_eq!(rate, min);

        let s = mccs_minimum_expected_rate_string(inst);
        assert_eq!(CStr::from_ptr(s).to_str().unwrap(), format!("{}/{}", min.num, min.den));
        mccs_string_free(s);

        let mut peak = frac(0, 0);
        let mut one = frac(0, 0);
        assert_eq!(mccs_peak_rate(inst, a, &mut peak), MccsStatus::Ok);
        assert_eq!(mccs_per_demand_rate(inst, a, 7, &mut one), MccsStatus::Ok);
        assert_eq!(peak, one);

        let mut equal = false;
        assert_eq!(mccs_verify_theorem(inst, &mut equal), MccsStatus::Ok);
        assert!(equal);

        mccs_placement_free(a);
        mccs_instance_free(inst);
    }
}

#[test]
fn invalid_arguments_set_status_and_message() {
    let mut inst = ptr::null_mut();
    unsafe {
        assert_eq!(mccs_instance_new(2, 3, 5, 1, &mut inst), MccsStatus::InvalidArgument);
        assert!(inst.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(mccs_instance_new(2, 3, 1, 0, &mut inst), MccsStatus::InvalidArgument);
        assert_eq!(mccs_instance_new(2, 3, 1, 1, ptr::null_mut()), MccsStatus::NullPointer);

        let mut out = frac(0, 0);
        assert_eq!(mccs_minimum_expected_rate(ptr::null(), &mut out), MccsStatus::NullPointer);
        assert!(mccs_minimum_expected_rate_string(ptr::null()).is_null());
        assert_eq!(mccs_placement_len(ptr::null()), 0);
        mccs_instance_free(ptr::null_mut());
        mccs_placement_free(ptr::null_mut());
        mccs_string_free(ptr::null_mut());
    }
}

#[test]
fn infeasible_placement_is_reported() {
    let inst = instance(2, 2, "1");
    let entries = [frac(1, 1), frac(1, 1), frac(0, 1)];
    let mut a = ptr::null_mut();
    unsafe {
        assert_eq!(mccs_placement_new(entries.as_ptr(), entries.len(), &mut a), MccsStatus::Ok);
        let mut out = frac(0, 0);
        assert_eq!(mccs_expected_rate(inst, a, &mut out), MccsStatus::Infeasible);
        assert!(last_error().contains("1"));
        mccs_placement_free(a);
        mccs_instance_free(inst);
    }
}

#[test]
fn simulate_small_demand() {
    let inst = instance(2, 3, "1");
    let demand = [1usize, 1, 2];
    let mut load = frac(0, 0);
    let mut decoded = false;
    unsafe {
        assert_eq!(mccs_simulate(inst, demand.as_ptr(), 3, 7, &mut load, &mut decoded), MccsStatus::Ok);
        assert_eq!(load, frac(2, 3));
        assert!(decoded);
        assert_eq!(mccs_simulate(inst, demand.as_ptr(), 2, 7, &mut load, &mut decoded), MccsStatus::InvalidArgument);
        let bad = [1usize, 3, 2];
        assert_eq!(mccs_simulate(inst, bad.as_ptr(), 3, 7, &mut load, &mut decoded), MccsStatus::InvalidArgument);
        mccs_instance_free(inst);
    }
}

#[test]
fn header_declares_exports() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/mccs.h")).unwrap();
    for name in [
        "mccs_instance_new",
        "mccs_instance_parse",
        "mccs_optimal_placement",
        "mccs_placement_entry",
        "mccs_expected_rate",
        "mccs_verify_theorem",
        "mccs_simulate",
        "mccs_last_error",
        "typedef struct MccsInstance MccsInstance",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

// Compiles examples/smoke.c against the static library when a C compiler is
// on PATH. Skipped otherwise.
#[test]
fn c_smoke_program() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libmccs_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("examples/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(run.status.success(), "{stdout}");
    assert!(stdout.contains("a_1 = 3/35"), "{stdout}");
    assert!(stdout.contains("lp = equal"));
    assert!(stdout.contains("load = 2/3 decoded = 1"));
}
