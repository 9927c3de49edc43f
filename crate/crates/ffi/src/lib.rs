//! C interface to `paraslab`.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns a
//! [`PsStatus`]; on failure the message is kept per thread and can be read
//! with [`ps_last_error`]. Panics are caught and reported as
//! [`PsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use paraslab::harness::{run_config, RunConfig};
use paraslab::mild::{picard_evolve, MildRunReport, PicardOptions, RunStatus};
use paraslab::profiles::{make_optimal_profile, sample_to_grid, Modulator};
use paraslab::semigroup::{apply_semigroup_grid, GridField};
use paraslab::{classify, derive_exponents, Case, Error, SystemParams};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParams = 3,
    CaseMismatch = 4,
    Numerical = 5,
    Config = 6,
    Io = 7,
    Panic = 8,
}

/// Outcome of an evolution.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsRunStatus {
    Converged = 0,
    Diverged = 1,
    MaxIter = 2,
}

/// Critical exponents of a parameter set.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PsExponents {
    pub lambda_mu: f64,
    pub lambda_nu: f64,
    pub r1_star: f64,
    pub r2_star: f64,
    pub scal_u: f64,
    pub scal_v: f64,
}

/// System parameters `(N, p, q, D1, D2)`.
pub struct PsParams(SystemParams);

/// Values of a function on the periodic grid `[-L, L)^N`.
pub struct PsField(GridField);

/// Result of [`ps_evolve`].
pub struct PsReport(MildRunReport);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> PsStatus {
    match err {
        Error::InvalidParams(_) | Error::HypothesisViolated(_) | Error::Modulator(_) => {
            PsStatus::InvalidParams
        }
        Error::CaseMismatch { .. } => PsStatus::CaseMismatch,
        Error::Config(_) => PsStatus::Config,
        Error::Io(_) => PsStatus::Io,
        _ => PsStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), PsStatus>) -> PsStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            PsStatus::Panic
        }
    }
}

fn fail(err: Error) -> PsStatus {
    let s = status_of(&err);
    set_error(err.to_string());
    s
}

fn null(what: &str) -> PsStatus {
    set_error(format!("{what} is null"));
    PsStatus::NullPointer
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, PsStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), PsStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ps_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build a parameter set; requires `0 < p <= q`, `pq > 1` and positive diffusivities.
///
/// # Safety
/// `out` must be a valid pointer; the handle is released with [`ps_params_free`].
#[no_mangle]
pub unsafe extern "C" fn ps_params_new(
    n: u32,
    p: f64,
    q: f64,
    d1: f64,
    d2: f64,
    out: *mut *mut PsParams,
) -> PsStatus {
    guard(|| {
        let params = SystemParams::new(n as usize, p, q, d1, d2).map_err(fail)?;
        put(out, PsParams(params))
    })
}

/// # Safety
/// `params` must be null or a handle from [`ps_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_params_free(params: *mut PsParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Case of the parameters as 0..5 for A..F.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_classify(params: *const PsParams, case_out: *mut u32) -> PsStatus {
    guard(|| {
        let p = get(params, "params")?;
        if case_out.is_null() {
            return Err(null("case_out"));
        }
        let label = classify(&p.0).label;
        *case_out = Case::ALL.iter().position(|c| *c == label).unwrap_or(0) as u32;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_exponents(params: *const PsParams, out: *mut PsExponents) -> PsStatus {
    guard(|| {
        let p = get(params, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let e = derive_exponents(&p.0);
        *out = PsExponents {
            lambda_mu: e.lambda_mu,
            lambda_nu: e.lambda_nu,
            r1_star: e.r1_star,
            r2_star: e.r2_star,
            scal_u: e.scal_u,
            scal_v: e.scal_v,
        };
        Ok(())
    })
}

/// Field from `points^dim` row-major values on `[-halfwidth, halfwidth)^dim`.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_field_from_values(
    dim: u32,
    points: usize,
    halfwidth: f64,
    values: *const f64,
    len: usize,
    out: *mut *mut PsField,
) -> PsStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let mut f = GridField::zeros(dim as usize, points, halfwidth).map_err(fail)?;
        if len != f.len() {
            set_error(format!("expected {} values, got {len}", f.len()));
            return Err(PsStatus::InvalidArgument);
        }
        let src = std::slice::from_raw_parts(values, len);
        if src.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            set_error("values must be finite and nonnegative");
            return Err(PsStatus::InvalidArgument);
        }
        f.values.copy_from_slice(src);
        put(out, PsField(f))
    })
}

/// Sample the optimal pair of the parameters' case onto a grid. `k` is the
/// log-decay exponent of the modulator for cases D and E and is ignored
/// otherwise.
///
/// # Safety
/// Pointers must be valid; both handles are released with [`ps_field_free`].
#[no_mangle]
pub unsafe extern "C" fn ps_field_optimal(
    params: *const PsParams,
    c1: f64,
    c2: f64,
    k: f64,
    halfwidth: f64,
    points: usize,
    mu_out: *mut *mut PsField,
    nu_out: *mut *mut PsField,
) -> PsStatus {
    guard(|| {
        let p = get(params, "params")?;
        if mu_out.is_null() || nu_out.is_null() {
            return Err(null("output pointer"));
        }
        let case = classify(&p.0).label;
        let h = match case {
            Case::D | Case::E => Some(Modulator::log_decay(k).map_err(fail)?),
            _ => None,
        };
        let pair = make_optimal_profile(&p.0, case, c1, c2, h).map_err(fail)?;
        let mu = sample_to_grid(&pair.mu, halfwidth, points).map_err(fail)?;
        let nu = sample_to_grid(&pair.nu, halfwidth, points).map_err(fail)?;
        put(mu_out, PsField(mu))?;
        put(nu_out, PsField(nu))
    })
}

/// Number of values in the field, or 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_field_len(field: *const PsField) -> usize {
    field.as_ref().map_or(0, |f| f.0.len())
}

/// Copy the values into `buf`, which must hold [`ps_field_len`] doubles.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_field_values(
    field: *const PsField,
    buf: *mut f64,
    len: usize,
) -> PsStatus {
    guard(|| {
        let f = get(field, "field")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < f.0.len() {
            set_error(format!("buffer holds {len} values, need {}", f.0.len()));
            return Err(PsStatus::InvalidArgument);
        }
        ptr::copy_nonoverlapping(f.0.values.as_ptr(), buf, f.0.len());
        Ok(())
    })
}

/// `S(D t)` applied to the field.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_heat_flow(
    field: *const PsField,
    diffusivity: f64,
    t: f64,
    out: *mut *mut PsField,
) -> PsStatus {
    guard(|| {
        let f = get(field, "field")?;
        let g = apply_semigroup_grid(&f.0, diffusivity, t).map_err(fail)?;
        put(out, PsField(g))
    })
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_field_free(field: *mut PsField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Picard evolution to `t_end` with default solver settings.
///
/// # Safety
/// Pointers must be valid; the report is released with [`ps_report_free`].
#[no_mangle]
pub unsafe extern "C" fn ps_evolve(
    params: *const PsParams,
    mu: *const PsField,
    nu: *const PsField,
    t_end: f64,
    max_iter: usize,
    out: *mut *mut PsReport,
) -> PsStatus {
    guard(|| {
        let p = get(params, "params")?;
        let (mu, nu) = (get(mu, "mu")?, get(nu, "nu")?);
        let options = PicardOptions {
            max_iter,
            ..Default::default()
        };
        let r = picard_evolve(&p.0, &mu.0, &nu.0, t_end, max_iter, &options).map_err(fail)?;
        put(out, PsReport(r))
    })
}

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_report_status(
    report: *const PsReport,
    out: *mut PsRunStatus,
) -> PsStatus {
    guard(|| {
        let r = get(report, "report")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match r.0.status {
            RunStatus::Converged => PsRunStatus::Converged,
            RunStatus::Diverged => PsRunStatus::Diverged,
            RunStatus::MaxIter => PsRunStatus::MaxIter,
        };
        Ok(())
    })
}

/// Number of checkpoints, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_report_checkpoints(report: *const PsReport) -> usize {
    report
        .as_ref()
        .map_or(0, |r| r.0.timegrid.checkpoint_times.len())
}

/// Checkpoint times and sup-norms of the last iterate; each buffer holds
/// `len >= ps_report_checkpoints` doubles. Any buffer may be null.
///
/// # Safety
/// Non-null buffers must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_report_sups(
    report: *const PsReport,
    times: *mut f64,
    sup_u: *mut f64,
    sup_v: *mut f64,
    len: usize,
) -> PsStatus {
    guard(|| {
        let r = get(report, "report")?;
        let t = &r.0.timegrid.checkpoint_times;
        if len < t.len() {
            set_error(format!("buffers hold {len} values, need {}", t.len()));
            return Err(PsStatus::InvalidArgument);
        }
        let last = r.0.last();
        for (dst, src) in [(times, t), (sup_u, &last.sup_u), (sup_v, &last.sup_v)] {
            if !dst.is_null() {
                ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
            }
        }
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_report_free(report: *mut PsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Run a TOML configuration as the command-line tool would, writing its
/// artifacts. `exit_code` receives 0, 2 or 3 with the tool's meaning.
///
/// # Safety
/// `toml` must be a NUL-terminated UTF-8 string; `exit_code` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_run_config(toml: *const c_char, exit_code: *mut i32) -> PsStatus {
    guard(|| {
        if toml.is_null() || exit_code.is_null() {
            return Err(null("argument"));
        }
        let text = CStr::from_ptr(toml).to_str().map_err(|_| {
            set_error("configuration is not valid UTF-8");
            PsStatus::InvalidArgument
        })?;
        let outcome = RunConfig::from_toml_str(text).and_then(run_config);
        match outcome {
            Ok(o) => {
                *exit_code = o.exit_code;
                Ok(())
            }
            Err(e) => {
                *exit_code = paraslab::harness::exit_code_for(&e);
                Err(fail(e))
            }
        }
    })
}
