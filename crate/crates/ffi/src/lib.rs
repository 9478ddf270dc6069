//! C ABI over `decopt`.
//!
//! Every entry point returns a [`DecoptStatus`]; on failure the message is
//! available from [`decopt_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use decopt::harness::{run_experiment, verify, write_outputs, ExperimentConfig, Suite, Summary};
use decopt::metrics::Status;
use decopt::topology::{laplacian_ratio, Graph, GraphSpec};
use decopt::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoptStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    InvalidGraph = 4,
    Precondition = 5,
    Numerical = 6,
    Io = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoptRunStatus {
    Running = 0,
    Converged = 1,
    Diverged = 2,
    MaxIters = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecoptCounters {
    pub comm_rounds: u64,
    pub grad_eval_rounds: u64,
    pub sample_grad_evals: u64,
}

/// Opaque graph handle.
pub struct DecoptGraph(Graph);

/// Opaque handle to a finished experiment (all replicates).
pub struct DecoptRun(Summary);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(DecoptStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let status = match &e {
            Error::InvalidGraph(_) | Error::Disconnected { .. } | Error::InvalidMixing(_) => DecoptStatus::InvalidGraph,
            Error::Precondition(_) => DecoptStatus::Precondition,
            Error::NonFinite { .. } | Error::NonFiniteGradient { .. } => DecoptStatus::Numerical,
            Error::Io(_) | Error::Csv(_) => DecoptStatus::Io,
            _ => DecoptStatus::InvalidConfig,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DecoptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DecoptStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            DecoptStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(DecoptStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(DecoptStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn json_err(e: serde_json::Error) -> Failure {
    Failure(DecoptStatus::InvalidConfig, e.to_string())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn decopt_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn decopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph from a JSON spec such as
/// `{"type": "random_regular", "n": 32, "degree": 5, "seed": 1}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn decopt_graph_from_json(json: *const c_char, out: *mut *mut DecoptGraph) -> DecoptStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let spec: GraphSpec = serde_json::from_str(str_arg(json, "json")?).map_err(json_err)?;
        *out = Box::into_raw(Box::new(DecoptGraph(spec.build()?)));
        Ok(())
    })
}

/// # Safety
/// `graph` must come from [`decopt_graph_from_json`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decopt_graph_num_nodes(graph: *const DecoptGraph, out: *mut usize) -> DecoptStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(graph, "graph")?.0.n();
        Ok(())
    })
}

/// # Safety
/// `graph` must come from [`decopt_graph_from_json`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decopt_graph_num_edges(graph: *const DecoptGraph, out: *mut usize) -> DecoptStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(graph, "graph")?.0.num_edges();
        Ok(())
    })
}

/// `λ₂(L) / λ_max(L)` of the graph Laplacian.
///
/// # Safety
/// `graph` must come from [`decopt_graph_from_json`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decopt_graph_laplacian_ratio(graph: *const DecoptGraph, out: *mut f64) -> DecoptStatus {
    guard(|| {
        *out_arg(out, "out")? = laplacian_ratio(&handle(graph, "graph")?.0);
        Ok(())
    })
}

/// # Safety
/// `graph` must come from [`decopt_graph_from_json`] or be null; it must not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn decopt_graph_free(graph: *mut DecoptGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Runs every replicate of an experiment config (same JSON as the CLI).
/// Divergence is a result, not an error.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn decopt_run_from_json(config_json: *const c_char, out: *mut *mut DecoptRun) -> DecoptStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let config = ExperimentConfig::from_json(str_arg(config_json, "config_json")?)?;
        *out = Box::into_raw(Box::new(DecoptRun(run_experiment(&config)?)));
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`decopt_run_from_json`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decopt_run_replicates(run: *const DecoptRun, out: *mut usize) -> DecoptStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(run, "run")?.0.runs.len();
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`decopt_run_from_json`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decopt_run_median_final_gap(run: *const DecoptRun, out: *mut f64) -> DecoptStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(run, "run")?.0.median_final_gap;
        Ok(())
    })
}

fn replicate(run: &DecoptRun, k: usize) -> Result<&decopt::harness::RunResult, Failure> {
    run.0.runs.get(k).ok_or_else(|| {
        Failure(DecoptStatus::OutOfRange, format!("replicate {k} out of range ({} runs)", run.0.runs.len()))
    })
}

/// # Safety
/// `run` must come from [`decopt_run_from_json`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decopt_run_final_gap(run: *const DecoptRun, replicate_index: usize, out: *mut f64) -> DecoptStatus {
    guard(|| {
        *out_arg(out, "out")? = replicate(handle(run, "run")?, replicate_index)?.final_gap;
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`decopt_run_from_json`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decopt_run_status(
    run: *const DecoptRun,
    replicate_index: usize,
    out: *mut DecoptRunStatus,
) -> DecoptStatus {
    guard(|| {
        *out_arg(out, "out")? = match replicate(handle(run, "run")?, replicate_index)?.status {
            Status::Running => DecoptRunStatus::Running,
            Status::Converged => DecoptRunStatus::Converged,
            Status::Diverged => DecoptRunStatus::Diverged,
            Status::MaxIters => DecoptRunStatus::MaxIters,
        };
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`decopt_run_from_json`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decopt_run_counters(
    run: *const DecoptRun,
    replicate_index: usize,
    out: *mut DecoptCounters,
) -> DecoptStatus {
    guard(|| {
        let c = replicate(handle(run, "run")?, replicate_index)?.counters;
        *out_arg(out, "out")? = DecoptCounters {
            comm_rounds: c.comm_rounds,
            grad_eval_rounds: c.grad_eval_rounds,
            sample_grad_evals: c.sample_grad_evals,
        };
        Ok(())
    })
}

/// Summary as JSON; release with [`decopt_string_free`].
///
/// # Safety
/// `run` must come from [`decopt_run_from_json`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decopt_run_summary_json(run: *const DecoptRun, out: *mut *mut c_char) -> DecoptStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = serde_json::to_string_pretty(&handle(run, "run")?.0).map_err(json_err)?;
        *out = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// Writes `<algorithm>_r<k>.csv` per replicate and `summary.json` to `dir`.
///
/// # Safety
/// `run` must come from [`decopt_run_from_json`]; `dir` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn decopt_run_write_outputs(run: *const DecoptRun, dir: *const c_char) -> DecoptStatus {
    guard(|| {
        let run = handle(run, "run")?;
        write_outputs(&run.0, Path::new(str_arg(dir, "dir")?))?;
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`decopt_run_from_json`] or be null; it must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn decopt_run_free(run: *mut DecoptRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Runs a verification suite (`equivalence`, `counterexamples`, `gradients`,
/// `oracles`, `topology` or `all`) and reports the number of checks.
///
/// # Safety
/// `suite` must be a NUL-terminated string; `passed` and `total` writable.
#[no_mangle]
pub unsafe extern "C" fn decopt_verify(suite: *const c_char, passed: *mut usize, total: *mut usize) -> DecoptStatus {
    guard(|| {
        let passed = out_arg(passed, "passed")?;
        let total = out_arg(total, "total")?;
        let checks = verify(Suite::parse(str_arg(suite, "suite")?)?)?;
        *total = checks.len();
        *passed = checks.iter().filter(|c| c.pass).count();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn decopt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
