use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use avgrew_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(avgrew_last_error_message()) }.to_str().unwrap().to_string()
}

fn new_mdp(name: &str) -> *mut AvgrewMdp {
    let mut mdp = ptr::null_mut();
    let status = unsafe { avgrew_mdp_new(c(name).as_ptr(), &mut mdp) };
    assert_eq!(status, AvgrewStatus::Ok, "{}", last_error());
    mdp
}

#[test]
fn mdp_shape_and_optimal_rate() {
    let mdp = new_mdp("two_loop");
    unsafe {
        assert_eq!(avgrew_mdp_n_states(mdp), 9);
        assert_eq!(avgrew_mdp_n_pairs(mdp), 10);
        assert_eq!(avgrew_mdp_n_actions(mdp, 0), 2);
        assert_eq!(avgrew_mdp_n_actions(mdp, 99), 0);
        let mut rate = 0.0;
        assert_eq!(avgrew_solve_optimal(mdp, 1e-12, &mut rate), AvgrewStatus::Ok);
        assert!((rate - 0.4).abs() < 1e-9);
        assert!(last_error().is_empty());
        avgrew_mdp_free(mdp);
    }
}

#[test]
fn unknown_env_sets_message() {
    let mut mdp = ptr::null_mut();
    let status = unsafe { avgrew_mdp_new(c("nowhere").as_ptr(), &mut mdp) };
    assert_eq!(status, AvgrewStatus::InvalidArgument);
    assert!(mdp.is_null());
    assert!(last_error().contains("nowhere"));
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        assert_eq!(avgrew_mdp_new(ptr::null(), ptr::null_mut()), AvgrewStatus::NullPointer);
        let mut rate = 0.0;
        assert_eq!(avgrew_solve_optimal(ptr::null(), 1e-9, &mut rate), AvgrewStatus::NullPointer);
        assert_eq!(avgrew_mdp_n_states(ptr::null()), 0);
        assert!(avgrew_diffq_rbar(ptr::null()).is_nan());
        avgrew_mdp_free(ptr::null_mut());
        avgrew_diffq_free(ptr::null_mut());
        avgrew_string_free(ptr::null_mut());
    }
}

#[test]
fn policy_rate_and_values() {
    let mdp = new_mdp("two_loop");
    unsafe {
        let mut rate = 0.0;
        assert_eq!(avgrew_policy_reward_rate(mdp, c("uniform").as_ptr(), &mut rate), AvgrewStatus::Ok);
        assert!((rate - 0.3).abs() < 1e-12);

        let mut d = [0.0; 9];
        let mut v = [0.0; 9];
        let st = avgrew_differential_values(mdp, c("uniform").as_ptr(), d.as_mut_ptr(), v.as_mut_ptr(), 9);
        assert_eq!(st, AvgrewStatus::Ok);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(d.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-12);

        let st = avgrew_differential_values(mdp, c("uniform").as_ptr(), d.as_mut_ptr(), v.as_mut_ptr(), 3);
        assert_eq!(st, AvgrewStatus::BufferTooSmall);

        let st = avgrew_policy_reward_rate(mdp, c("probs:0.5").as_ptr(), &mut rate);
        assert_eq!(st, AvgrewStatus::InvalidArgument);
        avgrew_mdp_free(mdp);
    }
}

#[test]
fn transient_state_gets_no_mass() {
    let mdp = new_mdp("two_state_transient");
    let mut d = [0.0; 2];
    let st = unsafe { avgrew_differential_values(mdp, c("uniform").as_ptr(), d.as_mut_ptr(), ptr::null_mut(), 2) };
    assert_eq!(st, AvgrewStatus::Ok, "{}", last_error());
    assert!(d[0].abs() < 1e-12 && (d[1] - 1.0).abs() < 1e-12);

    let mut rate = 0.0;
    let st = unsafe { avgrew_solve_optimal(mdp, 1e-12, &mut rate) };
    assert_eq!(st, AvgrewStatus::SolverError);
    assert!(last_error().contains("not communicating"));
    unsafe { avgrew_mdp_free(mdp) };
}

#[test]
fn diffq_handle_learns_the_single_loop() {
    let mdp = new_mdp("two_loop");
    unsafe {
        let mut q = ptr::null_mut();
        assert_eq!(avgrew_diffq_new(mdp, 0.1, 1.0, &mut q), AvgrewStatus::Ok);
        let mut delta = 0.0;
        assert_eq!(avgrew_diffq_step(q, 0, 0, 1.0, 1, &mut delta), AvgrewStatus::Ok);
        assert!((delta - 1.0).abs() < 1e-15);
        assert!((avgrew_diffq_rbar(q) - 0.1).abs() < 1e-15);

        let mut values = [0.0; 10];
        assert_eq!(avgrew_diffq_values(q, values.as_mut_ptr(), 10), AvgrewStatus::Ok);
        assert!((values[0] - 0.1).abs() < 1e-15);
        assert!(values[1..].iter().all(|&x| x == 0.0));
        assert_eq!(avgrew_diffq_values(q, values.as_mut_ptr(), 4), AvgrewStatus::BufferTooSmall);

        assert_eq!(avgrew_diffq_step(q, 0, 5, 1.0, 1, ptr::null_mut()), AvgrewStatus::InvalidArgument);
        assert_eq!(avgrew_diffq_step(q, 0, 0, 1.0, 42, ptr::null_mut()), AvgrewStatus::InvalidArgument);
        assert_eq!(avgrew_diffq_step(q, 0, 0, f64::NAN, 1, ptr::null_mut()), AvgrewStatus::InvalidArgument);
        assert!((avgrew_diffq_rbar(q) - 0.1).abs() < 1e-15);

        let mut other = ptr::null_mut();
        assert_eq!(avgrew_diffq_new(mdp, -1.0, 1.0, &mut other), AvgrewStatus::InvalidArgument);
        avgrew_diffq_free(q);
        avgrew_mdp_free(mdp);
    }
}

#[test]
fn json_entry_points() {
    unsafe {
        let mut out = ptr::null_mut();
        let st = avgrew_solve_json(c("two_loop").as_ptr(), c("optimal").as_ptr(), &mut out);
        assert_eq!(st, AvgrewStatus::Ok, "{}", last_error());
        let report: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        assert!((report["reward_rate_opt"].as_f64().unwrap() - 0.4).abs() < 1e-9);
        avgrew_string_free(out);

        let cfg = r#"{"env": "two_loop", "algorithm": "diff_q", "eta": 1.0, "steps": 500, "runs": 2, "eval_every": 100}"#;
        let mut out = ptr::null_mut();
        let st = avgrew_run_experiment_json(c(cfg).as_ptr(), &mut out);
        assert_eq!(st, AvgrewStatus::Ok, "{}", last_error());
        let log: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        assert_eq!(log["runs"].as_array().unwrap().len(), 2);
        avgrew_string_free(out);

        let mut out = ptr::null_mut();
        let st = avgrew_run_experiment_json(c(r#"{"algorithm": "rvi_q", "eta": 1.0}"#).as_ptr(), &mut out);
        assert_eq!(st, AvgrewStatus::InvalidArgument);
        assert!(out.is_null());
        assert!(!last_error().is_empty());
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/avgrew.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["avgrew_mdp_new", "avgrew_diffq_step", "avgrew_run_experiment_json", "AVGREW_STATUS_OK"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(&src, "#include \"avgrew.h\"\nint main(void) { return avgrew_mdp_n_states(0) == 0 ? 0 : 1; }\n").unwrap();
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler; header syntax not checked");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
