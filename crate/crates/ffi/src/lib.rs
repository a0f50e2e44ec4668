//! C interface to `avgrew-core`.
//!
//! Every fallible call returns an [`AvgrewStatus`]; on failure the message
//! is available from [`avgrew_last_error_message`] on the same thread.
//! Objects are opaque handles created by `*_new` and released by `*_free`.
//! Strings returned to the caller must be released with
//! [`avgrew_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use avgrew_core::control::{DiffQ, QTable};
use avgrew_core::envs::TabularEnv;
use avgrew_core::harness::{run_experiment, solve_command, ExperimentConfig, SolveTarget};
use avgrew_core::mdp::{StepSizeSchedule, TabularMdp, Transition};
use avgrew_core::solvers::{differential_values, reward_rate, solve_optimal};
use avgrew_core::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvgrewStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolverError = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NUL bytes removed"));
}

fn fail(status: AvgrewStatus, msg: impl Into<String>) -> AvgrewStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> AvgrewStatus {
    let status = if e.is_solver_error() { AvgrewStatus::SolverError } else { AvgrewStatus::InvalidArgument };
    fail(status, e.to_string())
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), AvgrewStatus>) -> AvgrewStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            AvgrewStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(AvgrewStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, AvgrewStatus> {
    if p.is_null() {
        return Err(fail(AvgrewStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(AvgrewStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<(), AvgrewStatus> {
    if p.is_null() {
        Err(fail(AvgrewStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn into_c_string(s: String) -> Result<*mut c_char, AvgrewStatus> {
    CString::new(s).map(CString::into_raw).map_err(|_| fail(AvgrewStatus::InvalidArgument, "output contains NUL"))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn avgrew_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn avgrew_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Opaque tabular MDP.
pub struct AvgrewMdp {
    mdp: TabularMdp,
}

/// Builds a named environment: `access_control`, `two_loop`,
/// `two_loop_big`, `two_loop_rare` or `two_state_transient`.
///
/// # Safety
/// `env_name` must be a NUL-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn avgrew_mdp_new(env_name: *const c_char, out: *mut *mut AvgrewMdp) -> AvgrewStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let name = read_str(env_name, "env_name")?;
        let env: TabularEnv = name.parse().map_err(from_error)?;
        let mdp = env.build().map_err(from_error)?;
        *out = Box::into_raw(Box::new(AvgrewMdp { mdp }));
        Ok(())
    })
}

/// # Safety
/// `mdp` must come from [`avgrew_mdp_new`] and not have been freed; null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn avgrew_mdp_free(mdp: *mut AvgrewMdp) {
    if !mdp.is_null() {
        drop(Box::from_raw(mdp));
    }
}

/// Number of states, or 0 for null.
///
/// # Safety
/// `mdp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn avgrew_mdp_n_states(mdp: *const AvgrewMdp) -> usize {
    mdp.as_ref().map_or(0, |m| m.mdp.n_states())
}

/// Number of state–action pairs, or 0 for null.
///
/// # Safety
/// `mdp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn avgrew_mdp_n_pairs(mdp: *const AvgrewMdp) -> usize {
    mdp.as_ref().map_or(0, |m| m.mdp.n_pairs())
}

/// Actions available in `state`, or 0 for null or an invalid state.
///
/// # Safety
/// `mdp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn avgrew_mdp_n_actions(mdp: *const AvgrewMdp, state: usize) -> usize {
    match mdp.as_ref() {
        Some(m) if state < m.mdp.n_states() => m.mdp.n_actions(state),
        _ => 0,
    }
}

unsafe fn mdp_ref<'a>(mdp: *const AvgrewMdp) -> Result<&'a TabularMdp, AvgrewStatus> {
    mdp.as_ref().map(|m| &m.mdp).ok_or_else(|| fail(AvgrewStatus::NullPointer, "mdp is null"))
}

/// Optimal reward rate by relative value iteration to tolerance `tol`.
///
/// # Safety
/// `mdp` must be a live handle; `out_rate` writable.
#[no_mangle]
pub unsafe extern "C" fn avgrew_solve_optimal(mdp: *const AvgrewMdp, tol: f64, out_rate: *mut f64) -> AvgrewStatus {
    guard(|| {
        let m = mdp_ref(mdp)?;
        out_ptr(out_rate, "out_rate")?;
        let sol = solve_optimal(m, tol).map_err(from_error)?;
        *out_rate = sol.reward_rate_opt;
        Ok(())
    })
}

/// Reward rate of a policy given by spec (`uniform`, `always:K`,
/// `probs:P0,P1,..`, `optimal`, `eps_optimal:E`).
///
/// # Safety
/// `mdp` must be a live handle, `policy` a NUL-terminated string and
/// `out_rate` writable.
#[no_mangle]
pub unsafe extern "C" fn avgrew_policy_reward_rate(
    mdp: *const AvgrewMdp,
    policy: *const c_char,
    out_rate: *mut f64,
) -> AvgrewStatus {
    guard(|| {
        let m = mdp_ref(mdp)?;
        let spec = read_str(policy, "policy")?;
        out_ptr(out_rate, "out_rate")?;
        let pi = resolve_policy(m, spec)?;
        *out_rate = reward_rate(m, &pi).map_err(from_error)?;
        Ok(())
    })
}

fn resolve_policy(m: &TabularMdp, spec: &str) -> Result<avgrew_core::mdp::Policy, AvgrewStatus> {
    let spec: avgrew_core::harness::PolicySpec = spec.parse().map_err(from_error)?;
    spec.resolve(m).map_err(from_error)
}

/// Stationary distribution and centered differential values of a policy.
/// `d_out` and `v_out` must each hold `len` ≥ number of states doubles;
/// either may be null to skip it.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn avgrew_differential_values(
    mdp: *const AvgrewMdp,
    policy: *const c_char,
    d_out: *mut f64,
    v_out: *mut f64,
    len: usize,
) -> AvgrewStatus {
    guard(|| {
        let m = mdp_ref(mdp)?;
        let spec = read_str(policy, "policy")?;
        let pi = resolve_policy(m, spec)?;
        if len < m.n_states() {
            return Err(fail(AvgrewStatus::BufferTooSmall, format!("need {} entries, got {len}", m.n_states())));
        }
        let sol = differential_values(m, &pi).map_err(from_error)?;
        if !d_out.is_null() {
            ptr::copy_nonoverlapping(sol.d.as_ptr(), d_out, sol.d.len());
        }
        if !v_out.is_null() {
            ptr::copy_nonoverlapping(sol.v.as_ptr(), v_out, sol.v.len());
        }
        Ok(())
    })
}

/// Opaque Differential Q-learning state with a constant step size.
pub struct AvgrewDiffQ {
    learner: DiffQ,
}

/// New learner shaped like `mdp`, zero-initialized.
///
/// # Safety
/// `mdp` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn avgrew_diffq_new(
    mdp: *const AvgrewMdp,
    alpha: f64,
    eta: f64,
    out: *mut *mut AvgrewDiffQ,
) -> AvgrewStatus {
    guard(|| {
        let m = mdp_ref(mdp)?;
        out_ptr(out, "out")?;
        if !(alpha > 0.0 && alpha.is_finite() && eta > 0.0 && eta.is_finite()) {
            return Err(fail(AvgrewStatus::InvalidArgument, "alpha and eta must be positive and finite"));
        }
        let learner = DiffQ::new(QTable::zeros(m), 0.0, eta, StepSizeSchedule::constant(alpha));
        *out = Box::into_raw(Box::new(AvgrewDiffQ { learner }));
        Ok(())
    })
}

/// # Safety
/// `q` must come from [`avgrew_diffq_new`] and not have been freed; null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn avgrew_diffq_free(q: *mut AvgrewDiffQ) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// One update from a transition. `delta_out` may be null.
///
/// # Safety
/// `q` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn avgrew_diffq_step(
    q: *mut AvgrewDiffQ,
    state: usize,
    action: usize,
    reward: f64,
    next_state: usize,
    delta_out: *mut f64,
) -> AvgrewStatus {
    guard(|| {
        let l = &mut q.as_mut().ok_or_else(|| fail(AvgrewStatus::NullPointer, "learner is null"))?.learner;
        let table = &l.q;
        let valid = state < table.n_states() && next_state < table.n_states() && action < table.n_actions(state);
        if !valid {
            return Err(fail(
                AvgrewStatus::InvalidArgument,
                format!("index out of range: ({state}, {action}) -> {next_state}"),
            ));
        }
        if !reward.is_finite() {
            return Err(fail(AvgrewStatus::InvalidArgument, "reward must be finite"));
        }
        let delta = l.step(&Transition::new(state, action, reward, next_state));
        if !delta_out.is_null() {
            *delta_out = delta;
        }
        Ok(())
    })
}

/// Reward-rate estimate, or NaN for null.
///
/// # Safety
/// `q` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn avgrew_diffq_rbar(q: *const AvgrewDiffQ) -> f64 {
    q.as_ref().map_or(f64::NAN, |l| l.learner.rbar)
}

/// Copies the action-value table, flattened state-major, into `out`.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn avgrew_diffq_values(q: *const AvgrewDiffQ, out: *mut f64, len: usize) -> AvgrewStatus {
    guard(|| {
        let l = &q.as_ref().ok_or_else(|| fail(AvgrewStatus::NullPointer, "learner is null"))?.learner;
        out_ptr(out, "out")?;
        let values = l.q.as_slice();
        if len < values.len() {
            return Err(fail(AvgrewStatus::BufferTooSmall, format!("need {} entries, got {len}", values.len())));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        Ok(())
    })
}

/// Runs an experiment from a JSON configuration and returns the run log
/// as JSON through `out_json` (free with [`avgrew_string_free`]).
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn avgrew_run_experiment_json(
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> AvgrewStatus {
    guard(|| {
        out_ptr(out_json, "out_json")?;
        let text = read_str(config_json, "config_json")?;
        let cfg = ExperimentConfig::from_json(text).map_err(from_error)?;
        let log = run_experiment(&cfg).map_err(from_error)?;
        let json = serde_json::to_string(&log).map_err(|e| fail(AvgrewStatus::InvalidArgument, e.to_string()))?;
        *out_json = into_c_string(json)?;
        Ok(())
    })
}

/// Exact solve report as JSON. `target` is a policy spec or `optimal`.
///
/// # Safety
/// Strings must be NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn avgrew_solve_json(
    env_name: *const c_char,
    target: *const c_char,
    out_json: *mut *mut c_char,
) -> AvgrewStatus {
    guard(|| {
        out_ptr(out_json, "out_json")?;
        let env: TabularEnv = read_str(env_name, "env_name")?.parse().map_err(from_error)?;
        let target = match read_str(target, "target")? {
            "optimal" => SolveTarget::Optimal,
            spec => SolveTarget::Policy(spec.parse().map_err(from_error)?),
        };
        let report = solve_command(&env, &target).map_err(from_error)?;
        *out_json = into_c_string(report.to_json())?;
        Ok(())
    })
}
