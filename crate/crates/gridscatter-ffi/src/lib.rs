//! C ABI for the gridscatter simulator.
//!
//! Configurations and run results are opaque handles owned by the
//! library; every fallible call returns a status code and leaves a
//! message readable through [`gs_last_error`]. The header is generated
//! into `include/gridscatter.h` at build time.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, c_int, CStr, CString};
use std::fs::File;
use std::io::Write as _;

use gridscatter::cli::{generate_initial, parse_initial_text};
use gridscatter::sim::{run_with_spec, RoundRecord, RunOutcome, RunStatus};
use gridscatter::trace::{trace_bytes, TraceMeta};
use gridscatter::verifier;
use gridscatter::{Configuration, Position, RobotId};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    GsOk = 0,
    GsErrNullArgument = 1,
    GsErrInvalidArgument = 2,
    GsErrParse = 3,
    GsErrRun = 4,
    GsErrIo = 5,
    GsErrIndex = 6,
}

/// An initial or final robot placement. Opaque.
pub struct GsConfig {
    inner: Configuration,
}

/// A finished simulation run: outcome, records, and trace metadata. Opaque.
pub struct GsRunResult {
    initial: Configuration,
    meta: TraceMeta,
    outcome: RunOutcome,
    records: Vec<RoundRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(msg).unwrap_or_default();
    });
}

fn fail(status: GsStatus, msg: impl Into<String>) -> GsStatus {
    set_error(msg);
    status
}

/// Message for the most recent error on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gs_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> GsStatus {
    if out.is_null() {
        return fail(GsStatus::GsErrNullArgument, "output pointer is null");
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    GsStatus::GsOk
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, GsStatus> {
    if ptr.is_null() {
        return Err(fail(
            GsStatus::GsErrNullArgument,
            format!("{what} pointer is null"),
        ));
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        fail(
            GsStatus::GsErrInvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })
}

/// Samples `n` distinct positions uniformly from the square
/// `[-half_width, half_width]^2`, seeded.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_config_generate(
    n: u32,
    half_width: i64,
    seed: u64,
    out: *mut *mut GsConfig,
) -> GsStatus {
    match generate_initial(n as usize, half_width, seed) {
        Ok(inner) => unsafe { write_out(out, GsConfig { inner }) },
        Err(e) => fail(GsStatus::GsErrInvalidArgument, e.to_string()),
    }
}

/// Parses the initial-configuration text format: `x y` per line,
/// `#` comments allowed.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` as in
/// [`gs_config_generate`].
#[no_mangle]
pub unsafe extern "C" fn gs_config_parse(text: *const c_char, out: *mut *mut GsConfig) -> GsStatus {
    let text = match unsafe { read_str(text, "configuration text") } {
        Ok(t) => t,
        Err(status) => return status,
    };
    match parse_initial_text(text) {
        Ok(inner) => unsafe { write_out(out, GsConfig { inner }) },
        Err(e) => fail(GsStatus::GsErrParse, e.to_string()),
    }
}

/// # Safety
/// `config` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gs_config_free(config: *mut GsConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Number of robots, or 0 for a null handle.
///
/// # Safety
/// `config` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gs_config_robot_count(config: *const GsConfig) -> u32 {
    match unsafe { config.as_ref() } {
        Some(c) => c.inner.len() as u32,
        None => 0,
    }
}

/// Reads robot `index` (0-based, id order) into `id`, `x`, `y`; null
/// output pointers are skipped.
///
/// # Safety
/// `config` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_config_robot(
    config: *const GsConfig,
    index: u32,
    id: *mut u32,
    x: *mut i64,
    y: *mut i64,
) -> GsStatus {
    let Some(c) = (unsafe { config.as_ref() }) else {
        return fail(GsStatus::GsErrNullArgument, "config handle is null");
    };
    let Some((robot, p)) = c.inner.iter().nth(index as usize) else {
        return fail(
            GsStatus::GsErrIndex,
            format!("robot index {index} out of range (n={})", c.inner.len()),
        );
    };
    unsafe {
        if !id.is_null() {
            *id = robot.0;
        }
        if !x.is_null() {
            *x = p.x;
        }
        if !y.is_null() {
            *y = p.y;
        }
    }
    GsStatus::GsOk
}

/// 1 if the placement already is the target formation, else 0.
///
/// # Safety
/// `config` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gs_config_is_final(config: *const GsConfig) -> c_int {
    match unsafe { config.as_ref() } {
        Some(c) => verifier::is_final(&c.inner) as c_int,
        None => 0,
    }
}

/// Runs the protocol from `config` under the given strategy spec
/// (`fsync`, `ssync:p=0.5,w=32`, `roundrobin`, `scripted:<path>`).
/// `strict` non-zero halts on the first verifier violation.
///
/// # Safety
/// `config` must be a live handle; `strategy` a NUL-terminated string;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_run(
    config: *const GsConfig,
    strategy: *const c_char,
    max_rounds: u32,
    seed: u64,
    strict: c_int,
    out: *mut *mut GsRunResult,
) -> GsStatus {
    let Some(c) = (unsafe { config.as_ref() }) else {
        return fail(GsStatus::GsErrNullArgument, "config handle is null");
    };
    let spec = match unsafe { read_str(strategy, "strategy") } {
        Ok(s) => s,
        Err(status) => return status,
    };
    match run_with_spec(&c.inner, spec, max_rounds, seed, strict != 0) {
        Ok((outcome, records)) => unsafe {
            write_out(
                out,
                GsRunResult {
                    initial: c.inner.clone(),
                    meta: TraceMeta::for_run(&c.inner, spec, seed),
                    outcome,
                    records,
                },
            )
        },
        Err(e) => fail(GsStatus::GsErrRun, e.to_string()),
    }
}

/// # Safety
/// `result` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gs_result_free(result: *mut GsRunResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

/// 0 converged, 1 round cap hit, 2 halted on a violation, -1 null handle.
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gs_result_status(result: *const GsRunResult) -> c_int {
    match unsafe { result.as_ref() } {
        Some(r) => match r.outcome.status {
            RunStatus::Converged { .. } => 0,
            RunStatus::MaxRoundsExceeded => 1,
            RunStatus::ViolationHalt => 2,
        },
        None => -1,
    }
}

/// Rounds before the quiescence confirmation for converged runs, total
/// rounds executed otherwise.
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gs_result_rounds(result: *const GsRunResult) -> u32 {
    match unsafe { result.as_ref() } {
        Some(r) => match r.outcome.status {
            RunStatus::Converged { rounds } => rounds,
            _ => r.records.len() as u32,
        },
        None => 0,
    }
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gs_result_moves(result: *const GsRunResult) -> u64 {
    match unsafe { result.as_ref() } {
        Some(r) => r.outcome.total_moves,
        None => 0,
    }
}

/// Total verifier violations recorded across all rounds.
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gs_result_violations(result: *const GsRunResult) -> u64 {
    match unsafe { result.as_ref() } {
        Some(r) => r
            .records
            .iter()
            .map(|rec| rec.violations.len() as u64)
            .sum(),
        None => 0,
    }
}

/// 1 if the run's final placement equals the oracle's expected formation
/// anchored at the initial bounds.
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gs_result_matches_oracle(result: *const GsRunResult) -> c_int {
    match unsafe { result.as_ref() } {
        Some(r) => {
            let expected: BTreeSet<Position> = verifier::expected_final(&r.initial);
            (r.outcome.final_config.position_set() == expected) as c_int
        }
        None => 0,
    }
}

/// Copies the final placement into a fresh config handle.
///
/// # Safety
/// `result` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_result_final_config(
    result: *const GsRunResult,
    out: *mut *mut GsConfig,
) -> GsStatus {
    let Some(r) = (unsafe { result.as_ref() }) else {
        return fail(GsStatus::GsErrNullArgument, "result handle is null");
    };
    unsafe {
        write_out(
            out,
            GsConfig {
                inner: r.outcome.final_config.clone(),
            },
        )
    }
}

/// The run's trace as a NUL-terminated string owned by the library;
/// release it with [`gs_string_free`].
///
/// # Safety
/// `result` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_result_trace_string(
    result: *const GsRunResult,
    out: *mut *mut c_char,
) -> GsStatus {
    let Some(r) = (unsafe { result.as_ref() }) else {
        return fail(GsStatus::GsErrNullArgument, "result handle is null");
    };
    if out.is_null() {
        return fail(GsStatus::GsErrNullArgument, "output pointer is null");
    }
    let bytes = trace_bytes(&r.meta, &r.initial, &r.records, &r.outcome);
    match CString::new(bytes) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            GsStatus::GsOk
        }
        Err(_) => fail(GsStatus::GsErrIo, "trace contains a NUL byte"),
    }
}

/// Writes the run's trace to `path`.
///
/// # Safety
/// `result` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gs_result_write_trace(
    result: *const GsRunResult,
    path: *const c_char,
) -> GsStatus {
    let Some(r) = (unsafe { result.as_ref() }) else {
        return fail(GsStatus::GsErrNullArgument, "result handle is null");
    };
    let path = match unsafe { read_str(path, "path") } {
        Ok(p) => p,
        Err(status) => return status,
    };
    let bytes = trace_bytes(&r.meta, &r.initial, &r.records, &r.outcome);
    let write = File::create(path).and_then(|mut f| f.write_all(&bytes));
    match write {
        Ok(()) => GsStatus::GsOk,
        Err(e) => fail(GsStatus::GsErrIo, format!("{path}: {e}")),
    }
}

/// # Safety
/// `s` must come from [`gs_result_trace_string`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gs_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

// keep RobotId referenced so the doc link in the header stays accurate
const _: fn(RobotId) -> u32 = |id| id.0;

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn null_out<T>() -> *mut *mut T {
        ptr::null_mut()
    }

    #[test]
    fn generate_run_and_inspect_through_the_abi() {
        unsafe {
            let mut config: *mut GsConfig = ptr::null_mut();
            let status = gs_config_generate(8, 15, 3, &mut config);
            assert_eq!(status, GsStatus::GsOk);
            assert_eq!(gs_config_robot_count(config), 8);

            let strategy = CString::new("fsync").unwrap();
            let mut result: *mut GsRunResult = ptr::null_mut();
            let status = gs_run(config, strategy.as_ptr(), 10_000, 3, 1, &mut result);
            assert_eq!(status, GsStatus::GsOk);
            assert_eq!(gs_result_status(result), 0);
            assert_eq!(gs_result_violations(result), 0);
            assert_eq!(gs_result_matches_oracle(result), 1);

            let mut final_config: *mut GsConfig = ptr::null_mut();
            assert_eq!(
                gs_result_final_config(result, &mut final_config),
                GsStatus::GsOk
            );
            assert_eq!(gs_config_is_final(final_config), 1);

            let mut text: *mut c_char = ptr::null_mut();
            assert_eq!(gs_result_trace_string(result, &mut text), GsStatus::GsOk);
            let trace = CStr::from_ptr(text).to_str().unwrap().to_string();
            assert!(trace.starts_with("# gridscatter-trace v1"));
            assert!(trace.contains("end status=converged"));
            gs_string_free(text);

            gs_config_free(final_config);
            gs_result_free(result);
            gs_config_free(config);
        }
    }

    #[test]
    fn parse_and_error_paths() {
        unsafe {
            let text = CString::new("0 0\n0 -1\n").unwrap();
            let mut config: *mut GsConfig = ptr::null_mut();
            assert_eq!(gs_config_parse(text.as_ptr(), &mut config), GsStatus::GsOk);
            let mut id = 0u32;
            let mut x = 0i64;
            let mut y = 0i64;
            assert_eq!(
                gs_config_robot(config, 1, &mut id, &mut x, &mut y),
                GsStatus::GsOk
            );
            assert_eq!((id, x, y), (2, 0, -1));
            assert_eq!(
                gs_config_robot(config, 9, &mut id, &mut x, &mut y),
                GsStatus::GsErrIndex
            );

            let bad = CString::new("0 0\n0 0\n").unwrap();
            let mut dup: *mut GsConfig = ptr::null_mut();
            assert_eq!(
                gs_config_parse(bad.as_ptr(), &mut dup),
                GsStatus::GsErrParse
            );
            let msg = CStr::from_ptr(gs_last_error()).to_str().unwrap();
            assert!(msg.contains("duplicate"), "got {msg}");

            let strategy = CString::new("warp-speed").unwrap();
            let mut result: *mut GsRunResult = ptr::null_mut();
            assert_eq!(
                gs_run(config, strategy.as_ptr(), 100, 1, 1, &mut result),
                GsStatus::GsErrRun
            );

            assert_eq!(
                gs_config_generate(5, 0, 1, null_out()),
                GsStatus::GsErrInvalidArgument
            );
            gs_config_free(config);
        }
    }
}
