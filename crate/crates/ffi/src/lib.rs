//! C ABI over the memsched solver.
//!
//! Instances and solutions are opaque heap handles released with their
//! `*_free` function. Every fallible call returns an [`MsStatus`]; on failure
//! [`ms_last_error_message`] describes the error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use memsched::dp::{extract_best, run_exact, Solution};
use memsched::fptas::{run_fptas, Certificate};
use memsched::instance::load_instance;
use memsched::rational::Ratio;
use memsched::{Error, Instance};
use serde::Serialize;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsStatus {
    Ok = 0,
    /// No schedule satisfies the (possibly relaxed) memory capacities.
    Infeasible = 1,
    InvalidArgument = 2,
    ParseError = 3,
    ResourceLimit = 4,
    Io = 5,
    Internal = 6,
}

/// Opaque instance handle.
pub struct MsInstance {
    inner: Instance,
}

/// Opaque solution handle.
pub struct MsSolution {
    solution: Solution,
    certificate: Option<Certificate>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> MsStatus {
    match err {
        Error::Input { .. } => MsStatus::InvalidArgument,
        Error::Parse { .. } | Error::Json(_) => MsStatus::ParseError,
        Error::Resource { .. } => MsStatus::ResourceLimit,
        Error::Io(_) => MsStatus::Io,
        Error::Internal(_) => MsStatus::Internal,
    }
}

/// Runs `f`, recording its error and turning panics into `Internal`.
fn guard(f: impl FnOnce() -> Result<MsStatus, (MsStatus, String)>) -> MsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside memsched");
            MsStatus::Internal
        }
    }
}

fn fail(err: Error) -> (MsStatus, String) {
    (status_of(&err), err.to_string())
}

fn null_arg(name: &str) -> (MsStatus, String) {
    (MsStatus::InvalidArgument, format!("{name} is null"))
}

/// Message for the last failed call on this thread, or null. The pointer stays
/// valid until the next memsched call on the same thread.
#[no_mangle]
pub extern "C" fn ms_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a JSON instance (`n`, `k`, `edges`, `costs`, `weights`, `capacities`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_instance_from_json(json: *const c_char, out: *mut *mut MsInstance) -> MsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        *out = ptr::null_mut();
        if json.is_null() {
            return Err(null_arg("json"));
        }
        let bytes = CStr::from_ptr(json).to_bytes();
        let inner = load_instance(bytes).map_err(fail)?;
        *out = Box::into_raw(Box::new(MsInstance { inner }));
        Ok(MsStatus::Ok)
    })
}

/// # Safety
/// `instance` must come from `ms_instance_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ms_instance_free(instance: *mut MsInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Number of jobs, or 0 for a null handle.
///
/// # Safety
/// `instance` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_instance_jobs(instance: *const MsInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.n())
}

/// Number of machines, or 0 for a null handle.
///
/// # Safety
/// `instance` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_instance_machines(instance: *const MsInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.k())
}

unsafe fn solve_into(
    instance: *const MsInstance,
    out: *mut *mut MsSolution,
    solve: impl FnOnce(&Instance) -> memsched::Result<Option<MsSolution>>,
) -> MsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        *out = ptr::null_mut();
        let instance = instance.as_ref().ok_or_else(|| null_arg("instance"))?;
        match solve(&instance.inner).map_err(fail)? {
            Some(sol) => {
                *out = Box::into_raw(Box::new(sol));
                Ok(MsStatus::Ok)
            }
            None => Ok(MsStatus::Infeasible),
        }
    })
}

/// Optimal schedule within the memory capacities. Returns
/// `MS_STATUS_INFEASIBLE` and leaves `*out` null when none exists.
///
/// # Safety
/// `instance` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_solve_exact(instance: *const MsInstance, out: *mut *mut MsSolution) -> MsStatus {
    solve_into(instance, out, |inst| {
        let (ntd, layout) = memsched::prepare(inst)?;
        let run = run_exact(inst, &ntd, &layout)?;
        Ok(extract_best(&run, inst.capacities()).map(|solution| MsSolution {
            solution,
            certificate: None,
        }))
    })
}

/// Schedule within `1 + eps` of the optimal makespan whose memory loads
/// exceed each capacity by at most `1 + eps`, with `eps = eps_num / eps_den`
/// in (0, 2].
///
/// # Safety
/// `instance` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_solve_fptas(
    instance: *const MsInstance,
    eps_num: u64,
    eps_den: u64,
    out: *mut *mut MsSolution,
) -> MsStatus {
    solve_into(instance, out, |inst| {
        let eps = Ratio::new(eps_num, eps_den)?;
        let (ntd, layout) = memsched::prepare(inst)?;
        Ok(run_fptas(inst, &ntd, &layout, eps)?.map(|o| MsSolution {
            solution: o.solution,
            certificate: Some(o.certificate),
        }))
    })
}

/// # Safety
/// `solution` must come from a solve call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_free(solution: *mut MsSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_makespan(solution: *const MsSolution) -> u64 {
    solution.as_ref().map_or(0, |s| s.solution.eval.makespan)
}

/// Whether every memory load is within its capacity (always true for exact
/// solutions).
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_feasible(solution: *const MsSolution) -> bool {
    solution.as_ref().is_some_and(|s| s.solution.eval.feasible)
}

unsafe fn copy_out<T: Copy>(values: &[T], out: *mut T, len: usize) -> MsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        if len < values.len() {
            return Err((
                MsStatus::InvalidArgument,
                format!("buffer holds {len} entries, {} needed", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        Ok(MsStatus::Ok)
    })
}

/// Copies the 0-based machine of every job into `out[0..n]`.
///
/// # Safety
/// `solution` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_assignment(solution: *const MsSolution, out: *mut usize, len: usize) -> MsStatus {
    match solution.as_ref() {
        Some(s) => copy_out(&s.solution.assignment.machine_of, out, len),
        None => guard(|| Err(null_arg("solution"))),
    }
}

/// Copies the `k` machine loads into `out`.
///
/// # Safety
/// `solution` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_loads(solution: *const MsSolution, out: *mut u64, len: usize) -> MsStatus {
    match solution.as_ref() {
        Some(s) => copy_out(&s.solution.eval.load, out, len),
        None => guard(|| Err(null_arg("solution"))),
    }
}

/// Copies the `k` memory loads into `out`.
///
/// # Safety
/// `solution` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_mems(solution: *const MsSolution, out: *mut u64, len: usize) -> MsStatus {
    match solution.as_ref() {
        Some(s) => copy_out(&s.solution.eval.memory, out, len),
        None => guard(|| Err(null_arg("solution"))),
    }
}

#[derive(Serialize)]
struct SolutionJson<'a> {
    makespan: u64,
    loads: &'a [u64],
    mems: &'a [u64],
    feasible: bool,
    assignment: &'a [usize],
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<&'a Certificate>,
}

/// The solution as a JSON string, released with `ms_string_free`; null on
/// failure.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_to_json(solution: *const MsSolution) -> *mut c_char {
    let mut text = ptr::null_mut();
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null_arg("solution"))?;
        let json = serde_json::to_string(&SolutionJson {
            makespan: s.solution.eval.makespan,
            loads: &s.solution.eval.load,
            mems: &s.solution.eval.memory,
            feasible: s.solution.eval.feasible,
            assignment: &s.solution.assignment.machine_of,
            certificate: s.certificate.as_ref(),
        })
        .map_err(|e| fail(e.into()))?;
        text = CString::new(json).map_err(|e| (MsStatus::Internal, e.to_string()))?.into_raw();
        Ok(MsStatus::Ok)
    });
    text
}

/// # Safety
/// `s` must come from `ms_solution_to_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ms_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
