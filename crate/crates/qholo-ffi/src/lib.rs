//! C interface to the qholo simulator.
//!
//! Every call returns a [`QhStatus`]. On failure a message for the calling
//! thread is kept until the next failing call and can be read with
//! [`qh_last_error_message`]. Handles are opaque and must be released
//! with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use qholo::cli::RunConfig;
use qholo::ensemble::{ensemble_pmd_with, Method};
use qholo::gaussian_optics::{photon_statistics, squeezing_to_db, SqueezedState};
use qholo::sfa_engine::{MomentumDistribution, MomentumGrid};
use qholo::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhMethod {
    GaussHermite = 0,
    MonteCarlo = 1,
}

/// Run configuration handle.
pub struct QhConfig {
    inner: RunConfig,
}

/// Momentum distribution handle; values are row-major by p_perp.
pub struct QhPmd {
    inner: MomentumDistribution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: QhStatus, msg: impl Into<String>) -> QhStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> QhStatus {
    let status = match e {
        Error::Domain(_) => QhStatus::InvalidArgument,
        Error::Config(_) => QhStatus::Config,
        Error::Numerical(_) => QhStatus::Numerical,
        Error::Io { .. } => QhStatus::Io,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> QhStatus) -> QhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(QhStatus::Panic, "internal panic"),
    }
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qh_config_new(out: *mut *mut QhConfig) -> QhStatus {
    guard(|| {
        if out.is_null() {
            return fail(QhStatus::NullPointer, "out is null");
        }
        *out = Box::into_raw(Box::new(QhConfig { inner: RunConfig::default() }));
        QhStatus::Ok
    })
}

/// Configuration parsed from a NUL-terminated TOML document.
///
/// # Safety
/// `text` must be a valid C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qh_config_from_toml(text: *const c_char, out: *mut *mut QhConfig) -> QhStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(QhStatus::NullPointer, "text or out is null");
        }
        let Ok(s) = CStr::from_ptr(text).to_str() else {
            return fail(QhStatus::InvalidArgument, "config text is not UTF-8");
        };
        match RunConfig::from_toml(s) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(QhConfig { inner }));
                QhStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Set the driver state: displacement α and squeezing (r, θ).
///
/// # Safety
/// `cfg` must come from `qh_config_new` or `qh_config_from_toml`.
#[no_mangle]
pub unsafe extern "C" fn qh_config_set_state(
    cfg: *mut QhConfig,
    alpha_re: f64,
    alpha_im: f64,
    r: f64,
    theta: f64,
) -> QhStatus {
    guard(|| {
        let Some(cfg) = cfg.as_mut() else {
            return fail(QhStatus::NullPointer, "cfg is null");
        };
        let alpha = Complex64::new(alpha_re, alpha_im);
        if let Err(e) = SqueezedState::new(alpha, r, theta) {
            return from_error(&e);
        }
        cfg.inner.squeezed_state.alpha = alpha;
        cfg.inner.squeezed_state.r = r;
        cfg.inner.squeezed_state.theta = theta;
        QhStatus::Ok
    })
}

/// Set the momentum grid.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn qh_config_set_grid(
    cfg: *mut QhConfig,
    pz_min: f64,
    pz_max: f64,
    pz_steps: usize,
    pperp_min: f64,
    pperp_max: f64,
    pperp_steps: usize,
) -> QhStatus {
    guard(|| {
        let Some(cfg) = cfg.as_mut() else {
            return fail(QhStatus::NullPointer, "cfg is null");
        };
        let grid = MomentumGrid { pz_min, pz_max, pz_steps, pperp_min, pperp_max, pperp_steps };
        if let Err(e) = grid.validate() {
            return from_error(&e);
        }
        cfg.inner.momentum_grid = grid;
        QhStatus::Ok
    })
}

/// Set the ensemble method; `count` is the quadrature order or the
/// Monte Carlo sample count.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn qh_config_set_ensemble(
    cfg: *mut QhConfig,
    method: QhMethod,
    count: usize,
    seed: u64,
) -> QhStatus {
    guard(|| {
        let Some(cfg) = cfg.as_mut() else {
            return fail(QhStatus::NullPointer, "cfg is null");
        };
        let mut ens = cfg.inner.ensemble_config;
        match method {
            QhMethod::GaussHermite => {
                ens.method = Method::GaussHermite;
                ens.order = count;
            }
            QhMethod::MonteCarlo => {
                ens.method = Method::MonteCarlo;
                ens.samples = count;
            }
        }
        ens.seed = seed;
        if let Err(e) = ens.validate() {
            return from_error(&e);
        }
        cfg.inner.ensemble_config = ens;
        QhStatus::Ok
    })
}

/// # Safety
/// `cfg` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qh_config_free(cfg: *mut QhConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Ensemble-averaged distribution for `cfg`.
///
/// # Safety
/// `cfg` must be a live configuration handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qh_pmd_compute(cfg: *const QhConfig, out: *mut *mut QhPmd) -> QhStatus {
    guard(|| {
        let (Some(cfg), false) = (cfg.as_ref(), out.is_null()) else {
            return fail(QhStatus::NullPointer, "cfg or out is null");
        };
        let c = &cfg.inner;
        let state = match c.state() {
            Ok(s) => s,
            Err(e) => return from_error(&e),
        };
        match ensemble_pmd_with(&state, &c.laser_params, &c.momentum_grid, &c.ensemble_config, &c.sfa) {
            Ok((inner, _)) => {
                *out = Box::into_raw(Box::new(QhPmd { inner }));
                QhStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Grid shape of a distribution.
///
/// # Safety
/// `pmd` must be live; `pz_steps` and `pperp_steps` writable.
#[no_mangle]
pub unsafe extern "C" fn qh_pmd_dims(pmd: *const QhPmd, pz_steps: *mut usize, pperp_steps: *mut usize) -> QhStatus {
    guard(|| {
        let Some(pmd) = pmd.as_ref() else {
            return fail(QhStatus::NullPointer, "pmd is null");
        };
        if pz_steps.is_null() || pperp_steps.is_null() {
            return fail(QhStatus::NullPointer, "output pointer is null");
        }
        *pz_steps = pmd.inner.grid.pz_steps;
        *pperp_steps = pmd.inner.grid.pperp_steps;
        QhStatus::Ok
    })
}

/// Copy the values into `buf`, which must hold exactly pz_steps·pperp_steps doubles.
///
/// # Safety
/// `pmd` must be live and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn qh_pmd_values(pmd: *const QhPmd, buf: *mut f64, len: usize) -> QhStatus {
    guard(|| {
        let Some(pmd) = pmd.as_ref() else {
            return fail(QhStatus::NullPointer, "pmd is null");
        };
        if buf.is_null() {
            return fail(QhStatus::NullPointer, "buf is null");
        }
        let v = &pmd.inner.values;
        if len != v.len() {
            return fail(QhStatus::InvalidArgument, format!("buffer holds {len}, need {}", v.len()));
        }
        std::ptr::copy_nonoverlapping(v.as_ptr(), buf, len);
        QhStatus::Ok
    })
}

/// # Safety
/// `pmd` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qh_pmd_free(pmd: *mut QhPmd) {
    if !pmd.is_null() {
        drop(Box::from_raw(pmd));
    }
}

/// Mean and variance of the photon number of a squeezed coherent state.
///
/// # Safety
/// `mean_n` and `var_n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qh_photon_statistics(
    alpha_re: f64,
    alpha_im: f64,
    r: f64,
    theta: f64,
    mean_n: *mut f64,
    var_n: *mut f64,
) -> QhStatus {
    guard(|| {
        if mean_n.is_null() || var_n.is_null() {
            return fail(QhStatus::NullPointer, "output pointer is null");
        }
        match SqueezedState::new(Complex64::new(alpha_re, alpha_im), r, theta) {
            Ok(s) => {
                let st = photon_statistics(&s);
                *mean_n = st.mean_n;
                *var_n = st.var_n;
                QhStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Quadrature noise reduction in dB for squeezing `r`.
///
/// # Safety
/// `db` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qh_squeezing_to_db(r: f64, db: *mut f64) -> QhStatus {
    guard(|| {
        if db.is_null() {
            return fail(QhStatus::NullPointer, "db is null");
        }
        match squeezing_to_db(r) {
            Ok(v) => {
                *db = v;
                QhStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}
