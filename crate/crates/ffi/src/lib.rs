//! C ABI over the jsplit engine.
//!
//! Families are opaque handles created from a built-in name or a JSON
//! configuration and released with `jsplit_family_free`. Every fallible
//! call returns a `JsplitStatus`; on failure the message is available from
//! `jsplit_last_error` on the same thread until the next failing call.
//! Symbols are 1-based, as on the command line.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jsplit::order::PointCloud;
use jsplit::splitting::{exact_scan_feasible, exact_splitting_search, find_splitting_witness};
use jsplit::sync::{diameter_series, fit_rate};
use jsplit::transport::{pullback_sample, wasserstein1, EmpiricalMeasure, Provenance};
use jsplit::{Error, MapFamily, Noise};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JsplitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// No splitting certificate was found within the search budget.
    Unverified = 3,
    /// Pullback or series did not converge.
    NotConverged = 4,
    /// Other outcome where the hypotheses could not be confirmed.
    Degenerate = 5,
    BufferTooSmall = 6,
    Io = 7,
    Panic = 8,
}

/// Opaque map family.
pub struct JsplitFamily {
    inner: MapFamily,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> JsplitStatus {
    match e {
        Error::Unverified { .. } => JsplitStatus::Unverified,
        Error::NotConverged { .. } | Error::TooManyFailures { .. } | Error::NoDecay { .. } => {
            JsplitStatus::NotConverged
        }
        e if e.is_soft() => JsplitStatus::Degenerate,
        Error::Io(_) => JsplitStatus::Io,
        _ => JsplitStatus::InvalidArgument,
    }
}

struct Fail(JsplitStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(JsplitStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(JsplitStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> JsplitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => JsplitStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
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
            JsplitStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn family<'a>(fam: *const JsplitFamily) -> Result<&'a MapFamily, Fail> {
    fam.as_ref().map(|f| &f.inner).ok_or_else(|| null("family"))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Message of the last failing call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn jsplit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn jsplit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a built-in family (`cantor1d`, `cantor2d`, `exp1d`, `fig1-2d`,
/// `lip-pair`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jsplit_family_builtin(name: *const c_char, out: *mut *mut JsplitFamily) -> JsplitStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let inner = MapFamily::builtin(name)?;
        write(out, Box::into_raw(Box::new(JsplitFamily { inner })), "out")
    })
}

/// Creates a family from a JSON configuration, as accepted by `--config`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jsplit_family_from_json(json: *const c_char, out: *mut *mut JsplitFamily) -> JsplitStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let inner = MapFamily::from_json(text)?;
        write(out, Box::into_raw(Box::new(JsplitFamily { inner })), "out")
    })
}

/// Releases a family. Null is ignored.
///
/// # Safety
/// `fam` must come from a constructor above and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn jsplit_family_free(fam: *mut JsplitFamily) {
    if !fam.is_null() {
        drop(Box::from_raw(fam));
    }
}

/// State-space dimension, or 0 for a null handle.
///
/// # Safety
/// `fam` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jsplit_family_dim(fam: *const JsplitFamily) -> usize {
    fam.as_ref().map_or(0, |f| f.inner.dim())
}

/// `out = f_symbol(x)` for a finite-noise family; `symbol` is 1-based.
///
/// # Safety
/// `x` and `out` must each hold `jsplit_family_dim(fam)` doubles.
#[no_mangle]
pub unsafe extern "C" fn jsplit_apply(
    fam: *const JsplitFamily,
    symbol: usize,
    x: *const f64,
    out: *mut f64,
) -> JsplitStatus {
    guard(|| {
        let fam = family(fam)?;
        if symbol == 0 {
            return Err(invalid("symbols are 1-based"));
        }
        apply(fam, Noise::Symbol(symbol - 1), x, out)
    })
}

/// `out = f_theta(x)` for a family with continuous noise parameters.
///
/// # Safety
/// `theta` must hold `theta_len` doubles; `x` and `out` the family
/// dimension.
#[no_mangle]
pub unsafe extern "C" fn jsplit_apply_param(
    fam: *const JsplitFamily,
    theta: *const f64,
    theta_len: usize,
    x: *const f64,
    out: *mut f64,
) -> JsplitStatus {
    guard(|| {
        let fam = family(fam)?;
        let theta = slice(theta, theta_len, "theta")?;
        if theta.is_empty() || theta.len() > jsplit::noise::MAX_NOISE_DIM {
            return Err(invalid("parameter length out of range"));
        }
        apply(fam, Noise::from_params(theta), x, out)
    })
}

unsafe fn apply(fam: &MapFamily, alpha: Noise, x: *const f64, out: *mut f64) -> Result<(), Fail> {
    let k = fam.dim();
    let x = slice(x, k, "x")?;
    let out = slice_mut(out, k, "out")?;
    let (y, _saturated) = fam.apply(alpha, x)?;
    out.copy_from_slice(&y);
    Ok(())
}

/// Splitting certificate found by the search.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct JsplitSplitting {
    /// Block length of the certificate.
    pub m: usize,
    pub mass_a: f64,
    pub mass_b: f64,
    /// `1 - min(mass_a, mass_b)`.
    pub lambda: f64,
    /// 1 when found by exhaustive enumeration, 0 for Monte Carlo.
    pub exact: i32,
}

/// Searches for a splitting certificate with block length up to `m_max`,
/// exhaustively when feasible and otherwise with `blocks` sampled blocks.
/// Returns `Unverified` when none is found.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jsplit_check_splitting(
    fam: *const JsplitFamily,
    m_max: usize,
    blocks: usize,
    seed: u64,
    out: *mut JsplitSplitting,
) -> JsplitStatus {
    guard(|| {
        let fam = family(fam)?;
        let probe = fam.default_probe();
        let exact = exact_scan_feasible(fam.noise(), m_max);
        let r = if exact {
            exact_splitting_search(fam, fam.order(), m_max, &probe)?
        } else {
            find_splitting_witness(fam, fam.order(), m_max, &probe, blocks, seed)?
        };
        let s = JsplitSplitting {
            m: r.m,
            mass_a: r.mass_a,
            mass_b: r.mass_b,
            lambda: r.lambda(),
            exact: i32::from(exact),
        };
        write(out, s, "out")
    })
}

/// Draws `n` stationary samples by pullback iteration into `out`
/// (row-major, `n * dim` doubles of capacity `out_len`). Samples that do
/// not converge within `n_max` steps are dropped; `kept` receives the
/// number written.
///
/// # Safety
/// `out` must hold `out_len` doubles and `kept` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jsplit_pullback_sample(
    fam: *const JsplitFamily,
    seed: u64,
    n: usize,
    tol: f64,
    n_max: usize,
    out: *mut f64,
    out_len: usize,
    kept: *mut usize,
) -> JsplitStatus {
    guard(|| {
        let fam = family(fam)?;
        let need = n.checked_mul(fam.dim()).ok_or_else(|| invalid("n is too large"))?;
        if out_len < need {
            return Err(Fail(
                JsplitStatus::BufferTooSmall,
                format!("output holds {out_len} doubles, need {need}"),
            ));
        }
        let out = slice_mut(out, out_len, "out")?;
        let s = pullback_sample(fam, seed, n, tol, n_max)?;
        let flat = s.measure.points().as_flat();
        out[..flat.len()].copy_from_slice(flat);
        write(kept, s.measure.len(), "kept")
    })
}

/// Fitted synchronization rate `r_hat` of the probe-image diameters over
/// `n_max` steps and `replicas` noise streams.
///
/// # Safety
/// `r_hat` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jsplit_diameter_rate(
    fam: *const JsplitFamily,
    n_max: usize,
    replicas: usize,
    seed: u64,
    r_hat: *mut f64,
) -> JsplitStatus {
    guard(|| {
        let fam = family(fam)?;
        let series = diameter_series(fam, &fam.default_probe(), n_max, replicas, seed, None)?;
        let fit = fit_rate(&series, 0, seed)?;
        write(r_hat, fit.r_hat, "r_hat")
    })
}

/// Wasserstein-1 distance (taxicab ground cost) between the uniform
/// empirical measures on `nx` and `ny` points of dimension `dim`.
///
/// # Safety
/// `x` must hold `nx * dim` doubles, `y` `ny * dim`, and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn jsplit_wasserstein1(
    dim: usize,
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    out: *mut f64,
) -> JsplitStatus {
    guard(|| {
        if dim == 0 || nx == 0 || ny == 0 {
            return Err(invalid("dimension and sample sizes must be positive"));
        }
        let measure = |p: *const f64, n: usize, what: &str| -> Result<EmpiricalMeasure, Fail> {
            let len = n.checked_mul(dim).ok_or_else(|| invalid("size overflow"))?;
            let cloud = PointCloud::from_flat(dim, slice(p, len, what)?.to_vec())?;
            Ok(EmpiricalMeasure::uniform(cloud, Provenance::User)?)
        };
        let d = wasserstein1(&measure(x, nx, "x")?, &measure(y, ny, "y")?)?;
        write(out, d.distance, "out")
    })
}
