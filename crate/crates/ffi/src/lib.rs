//! C interface to the quasibath simulator.
//!
//! Every fallible call returns a [`QbStatus`]; on failure a description is kept
//! per thread and can be read with [`qb_last_error`]. Handles are opaque and must
//! be released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use quasibath::config::Scenario;
use quasibath::green::green_quadrature;
use quasibath::propagator::{propagate, Initial, Trajectory};
use quasibath::spectrum::find_all_bound_states;
use quasibath::{Error, ModelConfig};

/// Result codes shared by all functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Numerics = 4,
    Domain = 5,
    SizeCap = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Model parameters.
pub struct QbConfig {
    inner: ModelConfig,
}

/// Chain amplitudes on the time grid.
pub struct QbTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> QbStatus {
    match err {
        Error::Config(_) | Error::Parse(_) | Error::Region(_) => QbStatus::InvalidConfig,
        Error::SizeCap(_) => QbStatus::SizeCap,
        Error::Domain(_) | Error::Singular(_) => QbStatus::Domain,
        Error::Io(_) => QbStatus::Io,
        Error::NonConvergence { .. } | Error::Numerics(_) | Error::Eigen(_) => QbStatus::Numerics,
    }
}

fn fail(status: QbStatus, msg: impl Into<String>) -> QbStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), QbStatus>) -> QbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QbStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(QbStatus::Panic, msg)
        }
    }
}

fn check(r: quasibath::Result<()>) -> Result<(), QbStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn lift<T>(r: quasibath::Result<T>) -> Result<T, QbStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, QbStatus> {
    p.as_ref().ok_or_else(|| fail(QbStatus::NullPointer, format!("{what} is null")))
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn qb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Default parameters: 21 sites, golden-ratio modulation, one-dimensional bath.
#[no_mangle]
pub extern "C" fn qb_config_default() -> *mut QbConfig {
    Box::into_raw(Box::new(QbConfig { inner: ModelConfig::default() }))
}

/// Parses a flat TOML scenario.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qb_config_parse(text: *const c_char, out: *mut *mut QbConfig) -> QbStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return Err(fail(QbStatus::NullPointer, "text and out must be non-null"));
        }
        let s = CStr::from_ptr(text).to_str().map_err(|e| fail(QbStatus::InvalidArgument, e.to_string()))?;
        let sc = lift(Scenario::parse(s))?;
        *out = Box::into_raw(Box::new(QbConfig { inner: sc.model }));
        Ok(())
    })
}

/// Sets one numeric parameter by its file key (`N_s`, `lambda`, `Delta`,
/// `beta`, `phi`, `d`, `g`, `N_b`, `dt`, `t_max`) and revalidates.
/// The configuration is left unchanged on failure.
///
/// # Safety
/// `cfg` must come from this library; `key` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn qb_config_set(cfg: *mut QbConfig, key: *const c_char, value: f64) -> QbStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| fail(QbStatus::NullPointer, "cfg is null"))?;
        if key.is_null() {
            return Err(fail(QbStatus::NullPointer, "key is null"));
        }
        let key = CStr::from_ptr(key).to_str().map_err(|e| fail(QbStatus::InvalidArgument, e.to_string()))?;
        let mut next = cfg.inner.clone();
        let count = |v: f64| -> Result<usize, QbStatus> {
            if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(fail(QbStatus::InvalidArgument, format!("{key} must be a non-negative integer, got {v}")))
            }
        };
        match key {
            "N_s" => next.n_s = count(value)?,
            "lambda" => next.lambda = value,
            "Delta" => next.delta = value,
            "beta" => next.beta = value,
            "phi" => next.phi = value,
            "d" => next.d = count(value)?,
            "g" => next.g = value,
            "N_b" => next.n_b = count(value)?,
            "dt" => next.dt = value,
            "t_max" => next.t_max = value,
            other => return Err(fail(QbStatus::InvalidArgument, format!("unknown key {other}"))),
        }
        check(next.validate())?;
        cfg.inner = next;
        Ok(())
    })
}

/// Writes the 16-hex-digit configuration hash plus NUL into `buf` (17 bytes).
///
/// # Safety
/// `cfg` must come from this library and `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn qb_config_hash(cfg: *const QbConfig, buf: *mut c_char, len: usize) -> QbStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        if buf.is_null() {
            return Err(fail(QbStatus::NullPointer, "buf is null"));
        }
        let h = cfg.inner.hash();
        if len < h.len() + 1 {
            return Err(fail(QbStatus::BufferTooSmall, format!("need {} bytes", h.len() + 1)));
        }
        ptr::copy_nonoverlapping(h.as_ptr() as *const c_char, buf, h.len());
        *buf.add(h.len()) = 0;
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qb_config_free(cfg: *mut QbConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Propagates the chain from site `n0` (1-based) up to t_max.
///
/// # Safety
/// `cfg` must come from this library and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qb_propagate(cfg: *const QbConfig, n0: usize, out: *mut *mut QbTrajectory) -> QbStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        if out.is_null() {
            return Err(fail(QbStatus::NullPointer, "out is null"));
        }
        let tr = lift(propagate(&cfg.inner, &Initial::Site(n0)))?;
        *out = Box::into_raw(Box::new(QbTrajectory { inner: tr }));
        Ok(())
    })
}

/// Number of time samples, or 0 for a null handle.
///
/// # Safety
/// `tr` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn qb_trajectory_len(tr: *const QbTrajectory) -> usize {
    tr.as_ref().map_or(0, |t| t.inner.len())
}

/// Number of chain sites, or 0 for a null handle.
///
/// # Safety
/// `tr` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn qb_trajectory_sites(tr: *const QbTrajectory) -> usize {
    tr.as_ref().map_or(0, |t| t.inner.n_s)
}

/// Time and amplitude of site `n` (1-based) at sample `i`.
///
/// # Safety
/// `tr` must come from this library; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn qb_trajectory_amplitude(
    tr: *const QbTrajectory,
    i: usize,
    n: usize,
    t: *mut f64,
    re: *mut f64,
    im: *mut f64,
) -> QbStatus {
    guard(|| {
        let tr = &deref(tr, "tr")?.inner;
        if t.is_null() || re.is_null() || im.is_null() {
            return Err(fail(QbStatus::NullPointer, "output pointers must be non-null"));
        }
        if i >= tr.len() || n == 0 || n > tr.n_s {
            return Err(fail(QbStatus::InvalidArgument, format!("sample {i} or site {n} out of range")));
        }
        let a = tr.amp(i, n);
        *t = tr.times[i];
        *re = a.re;
        *im = a.im;
        Ok(())
    })
}

/// # Safety
/// `tr` must come from this library (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qb_trajectory_free(tr: *mut QbTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

/// Real bound-state energies outside the bath band. Writes at most `cap`
/// energies and the total count into `count`; returns `BufferTooSmall` when
/// `cap` is short (the count is still written).
///
/// # Safety
/// `cfg` must come from this library; `energies` must hold `cap` doubles
/// (it may be null when `cap` is 0) and `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qb_bound_states(cfg: *const QbConfig, energies: *mut f64, cap: usize, count: *mut usize) -> QbStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        if count.is_null() || (cap > 0 && energies.is_null()) {
            return Err(fail(QbStatus::NullPointer, "count and energies must be non-null"));
        }
        let bound = lift(find_all_bound_states(&cfg.inner))?;
        *count = bound.len();
        for (k, b) in bound.iter().take(cap).enumerate() {
            *energies.add(k) = b.e;
        }
        if bound.len() > cap {
            return Err(fail(QbStatus::BufferTooSmall, format!("{} bound states, capacity {cap}", bound.len())));
        }
        Ok(())
    })
}

/// Lattice Green function f_d(m; e) on the physical sheet.
///
/// # Safety
/// `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qb_green(e_re: f64, e_im: f64, m: i64, d: usize, re: *mut f64, im: *mut f64) -> QbStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(fail(QbStatus::NullPointer, "output pointers must be non-null"));
        }
        let v = lift(green_quadrature(Complex64::new(e_re, e_im), m, d))?.value;
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}
