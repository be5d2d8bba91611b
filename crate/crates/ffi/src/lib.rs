//! C ABI over `cxlab-core`.
//!
//! Every fallible function returns a [`CxlabStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and can
//! be fetched with [`cxlab_last_error_message`]. Strings returned by the
//! library are owned by the caller and released with [`cxlab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cxlab_core::capacity::{build_instance, solve_instance, BitreeInstance, EquilibriumResult};
use cxlab_core::experiment::{run_cell, Cell, RunSettings};
use cxlab_core::{Error, Mode, NodeAddress};
use serde_json::{json, Value};

/// Status codes; zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CxlabStatus {
    Ok = 0,
    InvalidArgument = 1,
    Domain = 2,
    Precondition = 3,
    Resource = 4,
    Inexact = 5,
    NotConverged = 6,
    Parse = 7,
    NullPointer = 8,
    Utf8 = 9,
    Internal = 10,
    Panic = 11,
}

/// Scalar mode of a computation.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CxlabMode {
    Exact = 0,
    Float = 1,
}

impl From<CxlabMode> for Mode {
    fn from(m: CxlabMode) -> Self {
        match m {
            CxlabMode::Exact => Mode::Exact,
            CxlabMode::Float => Mode::Float,
        }
    }
}

/// Opaque bi-tree instance.
pub struct CxlabBitreeInstance(BitreeInstance);

/// Opaque equilibrium measure.
pub struct CxlabEquilibrium(EquilibriumResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CxlabStatus {
    match e {
        Error::InvalidArgument(_) => CxlabStatus::InvalidArgument,
        Error::Domain { .. } | Error::NegativeValue { .. } => CxlabStatus::Domain,
        Error::Precondition { .. } => CxlabStatus::Precondition,
        Error::Resource { .. } => CxlabStatus::Resource,
        Error::Inexact(_) => CxlabStatus::Inexact,
        Error::NotConverged { .. } => CxlabStatus::NotConverged,
        Error::Parse(_) | Error::Json(_) => CxlabStatus::Parse,
        _ => CxlabStatus::Internal,
    }
}

struct Fail(CxlabStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(CxlabStatus::Parse, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CxlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CxlabStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("panic inside cxlab".into());
            CxlabStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(CxlabStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(CxlabStatus::Utf8, format!("{what}: {e}")))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn write_json(out: *mut *mut c_char, v: &Value) -> Result<(), Fail> {
    let s = serde_json::to_string(v)?;
    let c = CString::new(s).map_err(|e| Fail(CxlabStatus::Internal, e.to_string()))?;
    write(out, c.into_raw(), "out")
}

/// Last error message on this thread, or null. Free with [`cxlab_string_free`].
#[no_mangle]
pub extern "C" fn cxlab_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cxlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn cxlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Depth of the longest common prefix of two node literals such as `"0110"`.
///
/// # Safety
/// `a` and `b` must be nul-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cxlab_lcp_depth(a: *const c_char, b: *const c_char, out: *mut usize) -> CxlabStatus {
    guard(|| {
        let a: NodeAddress = read_str(a, "a")?.parse()?;
        let b: NodeAddress = read_str(b, "b")?.parse()?;
        write(out, a.lcp_depth(&b), "out")
    })
}

/// Builds the bi-tree instance for `n ∈ {4, 16, 256, 65536}`.
///
/// # Safety
/// `out` must be writable; free the handle with [`cxlab_bitree_instance_free`].
#[no_mangle]
pub unsafe extern "C" fn cxlab_bitree_instance_new(n: u64, out: *mut *mut CxlabBitreeInstance) -> CxlabStatus {
    guard(|| {
        let inst = build_instance(n)?;
        write(out, Box::into_raw(Box::new(CxlabBitreeInstance(inst))), "out")
    })
}

/// # Safety
/// `inst` must come from [`cxlab_bitree_instance_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn cxlab_bitree_instance_free(inst: *mut CxlabBitreeInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of rectangles in the family.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cxlab_bitree_instance_family_len(
    inst: *const CxlabBitreeInstance,
    out: *mut usize,
) -> CxlabStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        write(out, inst.0.family_len(), "out")
    })
}

/// Instance summary as JSON: `n, s, m, delta, lambda, family`.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cxlab_bitree_instance_json(
    inst: *const CxlabBitreeInstance,
    out: *mut *mut c_char,
) -> CxlabStatus {
    guard(|| {
        let i = &inst.as_ref().ok_or_else(|| null("inst"))?.0;
        let family: Vec<String> = i.family().iter().map(ToString::to_string).collect();
        write_json(
            out,
            &json!({
                "n": i.n,
                "s": i.s,
                "m": i.m,
                "delta": i.delta.to_string(),
                "lambda": i.lambda.to_string(),
                "family": family,
            }),
        )
    })
}

/// Solves the equilibrium QP of the instance family.
///
/// A run that hits `max_iters` still returns a handle; check
/// [`cxlab_equilibrium_converged`].
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable; free the result with
/// [`cxlab_equilibrium_free`].
#[no_mangle]
pub unsafe extern "C" fn cxlab_equilibrium_solve(
    inst: *const CxlabBitreeInstance,
    tol: f64,
    max_iters: u64,
    symmetric: bool,
    out: *mut *mut CxlabEquilibrium,
) -> CxlabStatus {
    guard(|| {
        let i = &inst.as_ref().ok_or_else(|| null("inst"))?.0;
        let eq = solve_instance(i, tol, max_iters, symmetric)?;
        write(out, Box::into_raw(Box::new(CxlabEquilibrium(eq))), "out")
    })
}

/// # Safety
/// `eq` must come from [`cxlab_equilibrium_solve`] or be null.
#[no_mangle]
pub unsafe extern "C" fn cxlab_equilibrium_free(eq: *mut CxlabEquilibrium) {
    if !eq.is_null() {
        drop(Box::from_raw(eq));
    }
}

/// # Safety
/// `eq` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cxlab_equilibrium_cap(eq: *const CxlabEquilibrium, out: *mut f64) -> CxlabStatus {
    guard(|| write(out, eq.as_ref().ok_or_else(|| null("eq"))?.0.cap, "out"))
}

/// # Safety
/// `eq` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cxlab_equilibrium_kkt(eq: *const CxlabEquilibrium, out: *mut f64) -> CxlabStatus {
    guard(|| write(out, eq.as_ref().ok_or_else(|| null("eq"))?.0.kkt_max_violation, "out"))
}

/// # Safety
/// `eq` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cxlab_equilibrium_converged(eq: *const CxlabEquilibrium, out: *mut bool) -> CxlabStatus {
    guard(|| write(out, eq.as_ref().ok_or_else(|| null("eq"))?.0.converged, "out"))
}

/// The full equilibrium record as JSON.
///
/// # Safety
/// `eq` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cxlab_equilibrium_json(eq: *const CxlabEquilibrium, out: *mut *mut c_char) -> CxlabStatus {
    guard(|| {
        let eq = &eq.as_ref().ok_or_else(|| null("eq"))?.0;
        write_json(out, &serde_json::to_value(eq)?)
    })
}

fn cell_report(experiment: &str, cell: Cell, mode: Mode, seed: u64) -> Result<Value, Fail> {
    let settings = RunSettings { mode, seed, tol: None };
    let out = run_cell(experiment, &cell, &settings)?;
    Ok(serde_json::to_value(out)?)
}

fn cell_of(pairs: &[(&str, Value)]) -> Cell {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Runs one cell of a named experiment (as accepted by `cxlab run`) and
/// returns its JSON report. `cell_json` is an object of parameters.
///
/// # Safety
/// Strings must be nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cxlab_run_cell_json(
    experiment: *const c_char,
    cell_json: *const c_char,
    mode: CxlabMode,
    seed: u64,
    out: *mut *mut c_char,
) -> CxlabStatus {
    guard(|| {
        let name = read_str(experiment, "experiment")?;
        let cell: Cell = serde_json::from_str(read_str(cell_json, "cell_json")?)?;
        write_json(out, &cell_report(name, cell, mode.into(), seed)?)
    })
}

/// Increasing, subadditive counterexample on `levels` levels.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cxlab_cex_increasing_json(
    levels: u64,
    p: f64,
    mode: CxlabMode,
    out: *mut *mut c_char,
) -> CxlabStatus {
    guard(|| {
        let cell = cell_of(&[("N", json!(levels)), ("p", json!(p))]);
        write_json(out, &cell_report("cex-increasing", cell, mode.into(), 0)?)
    })
}

/// Direct counterexample with `f = 1` on the leftmost path.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cxlab_cex_direct_json(
    levels: u64,
    p: f64,
    mode: CxlabMode,
    out: *mut *mut c_char,
) -> CxlabStatus {
    guard(|| {
        let cell = cell_of(&[("N", json!(levels)), ("p", json!(p))]);
        write_json(out, &cell_report("cex-direct", cell, mode.into(), 0)?)
    })
}

/// Counterexample for `1 < p < 2`, always in float mode.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cxlab_cex_p_less_2_json(k: u32, p: f64, out: *mut *mut c_char) -> CxlabStatus {
    guard(|| {
        let cell = cell_of(&[("k", json!(k)), ("p", json!(p))]);
        write_json(out, &cell_report("cex-p-less-2", cell, Mode::Float, 0)?)
    })
}

/// Audit of the `p > 2` construction on both variants.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cxlab_cex_new23_json(
    levels: u64,
    p: f64,
    mode: CxlabMode,
    with_path: bool,
    out: *mut *mut c_char,
) -> CxlabStatus {
    guard(|| {
        let cell = cell_of(&[("N", json!(levels)), ("p", json!(p)), ("path", json!(with_path))]);
        write_json(out, &cell_report("cex-new23", cell, mode.into(), 0)?)
    })
}
