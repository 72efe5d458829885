//! C interface to the `ratbounds` solver.
//!
//! Every function returns an [`RbStatus`] code and writes results through out
//! pointers. Models and reports are opaque handles released with their
//! `_free` function. After a non-zero status, [`rb_last_error`] copies the
//! message of the most recent failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ratbounds::noise::{NoiseFamily, NoiseKind};
use ratbounds::payoffs::{ExtReal, ModelParams};
use ratbounds::rationalizability::{critical_sigma_f, iterate_bounds, sufficient_sigma_l, SolveOptions, SolveReport};
use ratbounds::Error;

/// Status codes.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Numeric = 3,
    NotConverged = 4,
    Panic = 5,
}

/// Noise families accepted by [`rb_params_set_family`].
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbFamily {
    Gaussian = 0,
    Laplace = 1,
    Logistic = 2,
}

/// Extended real: `kind` is -1 for minus infinity, 1 for plus infinity and 0
/// for a finite `value`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbExtReal {
    pub kind: i32,
    pub value: f64,
}

impl From<ExtReal> for RbExtReal {
    fn from(x: ExtReal) -> Self {
        match x {
            ExtReal::NegInf => RbExtReal { kind: -1, value: f64::NEG_INFINITY },
            ExtReal::Finite(v) => RbExtReal { kind: 0, value: v },
            ExtReal::PosInf => RbExtReal { kind: 1, value: f64::INFINITY },
        }
    }
}

/// Bound components, in the order used by [`rb_report_bound`].
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbBound {
    ThetaLo = 0,
    ThetaHi = 1,
    EffortLo = 2,
    EffortHi = 3,
    NoEffortLo = 4,
    NoEffortHi = 5,
}

/// Opaque model parameters.
pub struct RbParams(ModelParams);

/// Opaque solver report.
pub struct RbReport(SolveReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RbStatus {
    match e {
        Error::InvalidParameter(_) | Error::Unsupported(_) => RbStatus::InvalidArgument,
        Error::NotConverged { .. } => RbStatus::NotConverged,
        _ => RbStatus::Numeric,
    }
}

// Runs `f`, recording the message of any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (RbStatus, String)>) -> RbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RbStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            RbStatus::Panic
        }
    }
}

fn lib(e: Error) -> (RbStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (RbStatus, String) {
    (RbStatus::NullPointer, format!("{name} is null"))
}

/// Creates a Gaussian model with `n` followers. `sigma_l = 0` gives the
/// perfectly informed leader.
///
/// # Safety
/// `out` must be null or valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn rb_params_new(n: usize, sigma_f: f64, sigma_l: f64, out: *mut *mut RbParams) -> RbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = ModelParams::extension(n, sigma_f, sigma_l).map_err(lib)?;
        *out = Box::into_raw(Box::new(RbParams(p)));
        Ok(())
    })
}

/// Replaces the follower noise family (an [`RbFamily`] value). Non-Gaussian
/// families need `sigma_l = 0`.
///
/// # Safety
/// `params` must be null or a live handle from [`rb_params_new`].
#[no_mangle]
pub unsafe extern "C" fn rb_params_set_family(params: *mut RbParams, family: i32, scale: f64) -> RbStatus {
    guard(|| {
        let p = params.as_mut().ok_or_else(|| null("params"))?;
        let kind = match family {
            f if f == RbFamily::Gaussian as i32 => NoiseKind::Gaussian,
            f if f == RbFamily::Laplace as i32 => NoiseKind::Laplace,
            f if f == RbFamily::Logistic as i32 => NoiseKind::Logistic,
            f => return Err((RbStatus::InvalidArgument, format!("unknown family {f}"))),
        };
        let fam = NoiseFamily::new(kind, scale).map_err(lib)?;
        p.0 = p.0.with_family(fam).map_err(lib)?;
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a handle from [`rb_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rb_params_free(params: *mut RbParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Iterates the dominance bounds. `max_rounds = 0` and `tol <= 0` select the
/// defaults (500 rounds, 1e-9). A run that exhausts its rounds still returns
/// a report; check [`rb_report_converged`].
///
/// # Safety
/// `params` must be a live handle and `out` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn rb_solve(
    params: *const RbParams,
    max_rounds: usize,
    tol: f64,
    out: *mut *mut RbReport,
) -> RbStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = SolveOptions::default();
        let opts = SolveOptions::new(
            if max_rounds == 0 { d.max_rounds } else { max_rounds },
            if tol > 0.0 { tol } else { d.tol },
        )
        .map_err(lib)?;
        let report = iterate_bounds(&p.0, &opts).map_err(lib)?;
        *out = Box::into_raw(Box::new(RbReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle from [`rb_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rb_report_free(report: *mut RbReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Whether the limit bounds coincide.
///
/// # Safety
/// `report` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rb_report_unique(report: *const RbReport, out: *mut bool) -> RbStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = r.0.unique;
        Ok(())
    })
}

/// Whether the iteration settled within its round budget.
///
/// # Safety
/// `report` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rb_report_converged(report: *const RbReport, out: *mut bool) -> RbStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = r.0.converged;
        Ok(())
    })
}

/// Number of rounds the iteration ran.
///
/// # Safety
/// `report` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rb_report_rounds(report: *const RbReport, out: *mut usize) -> RbStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = r.0.rounds_used;
        Ok(())
    })
}

/// One component of the final bounds, selected by an [`RbBound`] value.
///
/// # Safety
/// `report` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rb_report_bound(report: *const RbReport, which: i32, out: *mut RbExtReal) -> RbStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let l = &r.0.limits;
        let v = *l
            .components()
            .get(usize::try_from(which).unwrap_or(usize::MAX))
            .ok_or_else(|| (RbStatus::InvalidArgument, format!("unknown bound {which}")))?;
        *out.as_mut().ok_or_else(|| null("out"))? = v.into();
        Ok(())
    })
}

/// Critical follower noise for `n` followers with a perfectly informed leader.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rb_critical_sigma_f(n: usize, out: *mut f64) -> RbStatus {
    guard(|| {
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        *o = critical_sigma_f(n).map_err(lib)?;
        Ok(())
    })
}

/// Leader noise above which play is unique when σ_F = gamma·σ_L.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rb_sufficient_sigma_l(gamma: f64, n: usize, out: *mut f64) -> RbStatus {
    guard(|| {
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        *o = sufficient_sigma_l(gamma, n).map_err(lib)?.sigma_l_hat;
        Ok(())
    })
}

/// Copies the last error message of this thread into `buf` (truncated and
/// NUL-terminated) and returns its full length in bytes, or 0 if there is
/// none. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or valid for writing `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
