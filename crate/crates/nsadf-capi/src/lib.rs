//! C ABI over the core estimators: simulate a dependence structure, fit the
//! non-stationary ADF (quantile-regression grid plus smooth Bernstein
//! model), evaluate constrained ADF values and η, and extract return
//! curves.
//!
//! Conventions:
//! * handles (`nsadf_series`, `nsadf_adf_fit`) are opaque; free them with
//!   the matching `*_free` function exactly once;
//! * every fallible call returns an [`NsadfStatus`]; on failure the
//!   thread-local message retrieved by [`nsadf_last_error_message`]
//!   explains what happened;
//! * all pointers must be non-null unless documented otherwise; output
//!   buffers are caller-allocated with the documented capacity;
//! * panics never cross the boundary (they convert to `NSADF_STATUS_PANIC`).

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nsadf::adf::{
    fit_bernstein, lambda_qr_average, AdfGrid, BernsteinFitConfig, BernsteinModel, Link,
    QuantileSchedule, RayGrid,
};
use nsadf::basis::BasisSpec;
use nsadf::copula::{sample, CopulaFamily, CopulaSpec, McmcConfig};
use nsadf::curve::{averaged_exp_curve, AdfEstimator};
use nsadf::error::Error;
use nsadf::series::ExpSeries;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsadfStatus {
    Ok = 0,
    InvalidArgument = 1,
    Parse = 2,
    Numerical = 3,
    Io = 4,
    NullPointer = 5,
    Panic = 6,
}

/// A bivariate series on standard exponential margins (opaque).
#[allow(non_camel_case_types)]
pub struct nsadf_series {
    inner: ExpSeries,
}

/// A fitted non-stationary ADF: the quantile-regression grid with its
/// per-ray threshold fits, plus the smooth Bernstein model (opaque).
#[allow(non_camel_case_types)]
pub struct nsadf_adf_fit {
    grid: AdfGrid,
    smooth: BernsteinModel,
}

fn set_error(msg: &str) {
    let cleaned: Vec<u8> = msg.bytes().filter(|&b| b != 0).collect();
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> NsadfStatus {
    match err {
        Error::InvalidArgument(_) | Error::Config(_) => NsadfStatus::InvalidArgument,
        Error::Parse(_) | Error::Json(_) => NsadfStatus::Parse,
        Error::Degenerate(_) | Error::SingularDesign(_) | Error::Numerical(_) => {
            NsadfStatus::Numerical
        }
        Error::Io(_) => NsadfStatus::Io,
        Error::Stage { source, .. } => status_of(source),
    }
}

fn run<F: FnOnce() -> Result<NsadfStatus, Error>>(f: F) -> NsadfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            NsadfStatus::Panic
        }
    }
}

macro_rules! require_nonnull {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_error(concat!("null pointer argument: ", stringify!($ptr)));
            return NsadfStatus::NullPointer;
        }
    };
}

/// Copy the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length in bytes, excluding
/// the terminator. `buf` may be null to query the length.
#[no_mangle]
pub extern "C" fn nsadf_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Simulate `n` observations of the named dependence structure
/// (`gaussian_pos`, `gaussian_neg`, `inv_logistic`, `inv_alog`,
/// `inv_husler_reiss`, `gauge_model12`) with its standard parameter
/// trajectory. `kappa1`/`kappa2` only affect `inv_alog`.
///
/// # Safety
/// `family` must be valid NUL-terminated UTF-8 and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsadf_simulate(
    family: *const c_char,
    n: usize,
    seed: u64,
    kappa1: f64,
    kappa2: f64,
    out: *mut *mut nsadf_series,
) -> NsadfStatus {
    require_nonnull!(family);
    require_nonnull!(out);
    run(|| {
        let name = CStr::from_ptr(family)
            .to_str()
            .map_err(|_| Error::invalid("family is not valid UTF-8"))?;
        let fam = CopulaFamily::parse(name)?;
        let spec = CopulaSpec {
            family: fam,
            n,
            asymmetry: (fam == CopulaFamily::InvALog).then_some((kappa1, kappa2)),
            seed,
        };
        let mcmc = McmcConfig::default();
        let mcmc_opt = (fam == CopulaFamily::GaugeModel12).then_some(&mcmc);
        let sampled = sample(&spec, mcmc_opt)?;
        *out = Box::into_raw(Box::new(nsadf_series {
            inner: sampled.series,
        }));
        Ok(NsadfStatus::Ok)
    })
}

/// Wrap caller-provided exponential-margin observations (copied).
///
/// # Safety
/// `x` and `y` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nsadf_series_from_arrays(
    x: *const f64,
    y: *const f64,
    len: usize,
    out: *mut *mut nsadf_series,
) -> NsadfStatus {
    require_nonnull!(x);
    require_nonnull!(y);
    require_nonnull!(out);
    run(|| {
        let xs = std::slice::from_raw_parts(x, len).to_vec();
        let ys = std::slice::from_raw_parts(y, len).to_vec();
        let series = ExpSeries::new((1..=len as u32).collect(), None, xs, ys)?;
        *out = Box::into_raw(Box::new(nsadf_series { inner: series }));
        Ok(NsadfStatus::Ok)
    })
}

/// Number of observations, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn nsadf_series_len(series: *const nsadf_series) -> usize {
    if series.is_null() {
        return 0;
    }
    unsafe { (*series).inner.len() }
}

/// Copy the series into caller buffers of length `nsadf_series_len`.
///
/// # Safety
/// `x_out` and `y_out` must hold at least `nsadf_series_len(series)` doubles.
#[no_mangle]
pub unsafe extern "C" fn nsadf_series_values(
    series: *const nsadf_series,
    x_out: *mut f64,
    y_out: *mut f64,
) -> NsadfStatus {
    require_nonnull!(series);
    require_nonnull!(x_out);
    require_nonnull!(y_out);
    run(|| {
        let s = &(*series).inner;
        std::ptr::copy_nonoverlapping(s.x().as_ptr(), x_out, s.len());
        std::ptr::copy_nonoverlapping(s.y().as_ptr(), y_out, s.len());
        Ok(NsadfStatus::Ok)
    })
}

/// # Safety
/// `series` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nsadf_series_free(series: *mut nsadf_series) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

#[derive(serde::Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct FitOptions {
    rays: Option<usize>,
    degree: Option<usize>,
    link: Option<String>,
    seed: Option<u64>,
    poly_degree: Option<u32>,
}

/// Fit the non-stationary ADF to a series. `config_json` may be null for
/// defaults, or a JSON object with optional keys `rays` (grid size),
/// `degree` (Bernstein degree), `link` ("exponential" | "logit"), `seed`,
/// and `poly_degree` (time-polynomial order of the quantile basis).
///
/// # Safety
/// `series` must be a live handle; `config_json`, when non-null, must be
/// NUL-terminated UTF-8; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nsadf_fit_adf(
    series: *const nsadf_series,
    config_json: *const c_char,
    out: *mut *mut nsadf_adf_fit,
) -> NsadfStatus {
    require_nonnull!(series);
    require_nonnull!(out);
    run(|| {
        let opts: FitOptions = if config_json.is_null() {
            FitOptions::default()
        } else {
            let text = CStr::from_ptr(config_json)
                .to_str()
                .map_err(|_| Error::invalid("config is not valid UTF-8"))?;
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        let rays = RayGrid::with_step(opts.rays.unwrap_or(101));
        let basis = BasisSpec::poly(opts.poly_degree.unwrap_or(3));
        let mut bp_cfg = BernsteinFitConfig::default();
        if let Some(d) = opts.degree {
            bp_cfg.degree = d;
        }
        if let Some(link) = &opts.link {
            bp_cfg.link = match link.as_str() {
                "exponential" => Link::Exponential,
                "logit" => Link::Logit,
                other => return Err(Error::Config(format!("unknown link '{other}'"))),
            };
        }
        if let Some(seed) = opts.seed {
            bp_cfg.seed = seed;
        }
        let grid = lambda_qr_average(
            &(*series).inner,
            &rays,
            &QuantileSchedule::standard(),
            &basis,
        )?;
        let smooth = fit_bernstein(&grid, &bp_cfg)?;
        *out = Box::into_raw(Box::new(nsadf_adf_fit {
            grid,
            smooth: smooth.model,
        }));
        Ok(NsadfStatus::Ok)
    })
}

/// Number of rays in the fitted grid (the length of curve buffers).
#[no_mangle]
pub extern "C" fn nsadf_adf_ray_count(fit: *const nsadf_adf_fit) -> usize {
    if fit.is_null() {
        return 0;
    }
    unsafe { (*fit).grid.rays.len() }
}

/// Constrained ADF value `λ*(w | z_t)`; `use_smooth` selects the Bernstein
/// model (nonzero) or the quantile-regression grid (zero, nearest ray).
///
/// # Safety
/// `fit` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsadf_adf_eval(
    fit: *const nsadf_adf_fit,
    w: f64,
    t: u32,
    use_smooth: c_int,
    out: *mut f64,
) -> NsadfStatus {
    require_nonnull!(fit);
    require_nonnull!(out);
    run(|| {
        let f = &*fit;
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::invalid("ray must lie in [0,1]"));
        }
        let t_idx = time_index(&f.grid, t)?;
        let v = if use_smooth != 0 {
            let day = f.grid.day.as_ref().map(|d| d[t_idx] as f64);
            f.smooth.eval_star(w, t as f64, day)?
        } else {
            f.grid.lambda_star(f.grid.rays.nearest(w), t_idx)
        };
        *out = v;
        Ok(NsadfStatus::Ok)
    })
}

/// Tail-dependence coefficient `η(t) = 1/(2 λ*(1/2 | z_t))`.
///
/// # Safety
/// `fit` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsadf_adf_eta(
    fit: *const nsadf_adf_fit,
    t: u32,
    use_smooth: c_int,
    out: *mut f64,
) -> NsadfStatus {
    require_nonnull!(fit);
    require_nonnull!(out);
    run(|| {
        let mut lam = 0.0;
        let st = nsadf_adf_eval(fit, 0.5, t, use_smooth, &mut lam);
        if st != NsadfStatus::Ok {
            return Ok(st);
        }
        *out = nsadf::adf::eta_from_adf(lam)?;
        Ok(NsadfStatus::Ok)
    })
}

/// Return curve at joint survival probability `p` and time `t`. Buffers
/// `rays_out`, `x_out`, `y_out` must each hold `nsadf_adf_ray_count(fit)`
/// doubles.
///
/// # Safety
/// `fit` must be a live handle; the three buffers must be writable with the
/// documented capacity.
#[no_mangle]
pub unsafe extern "C" fn nsadf_return_curve(
    fit: *const nsadf_adf_fit,
    p: f64,
    t: u32,
    use_smooth: c_int,
    rays_out: *mut f64,
    x_out: *mut f64,
    y_out: *mut f64,
) -> NsadfStatus {
    require_nonnull!(fit);
    require_nonnull!(rays_out);
    require_nonnull!(x_out);
    require_nonnull!(y_out);
    run(|| {
        let f = &*fit;
        let t_idx = time_index(&f.grid, t)?;
        let est = if use_smooth != 0 {
            AdfEstimator::Smooth(&f.smooth)
        } else {
            AdfEstimator::QuantileGrid(&f.grid)
        };
        let curve = averaged_exp_curve(&f.grid, &est, p, t_idx)?;
        std::ptr::copy_nonoverlapping(curve.rays.as_ptr(), rays_out, curve.len());
        std::ptr::copy_nonoverlapping(curve.x.as_ptr(), x_out, curve.len());
        std::ptr::copy_nonoverlapping(curve.y.as_ptr(), y_out, curve.len());
        Ok(NsadfStatus::Ok)
    })
}

/// Serialize the fitted smooth model as a versioned JSON document the CLI
/// can also read. Free the returned string with [`nsadf_string_free`].
///
/// # Safety
/// `fit` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsadf_smooth_model_json(
    fit: *const nsadf_adf_fit,
    out: *mut *mut c_char,
) -> NsadfStatus {
    require_nonnull!(fit);
    require_nonnull!(out);
    run(|| {
        let doc = serde_json::json!({
            "schema": "nsadf/bernstein/v1",
            "payload": &(*fit).smooth,
        });
        let text = serde_json::to_string_pretty(&doc).map_err(Error::Json)?;
        let c = CString::new(text).map_err(|_| Error::invalid("embedded NUL"))?;
        *out = c.into_raw();
        Ok(NsadfStatus::Ok)
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nsadf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `fit` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nsadf_adf_fit_free(fit: *mut nsadf_adf_fit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

fn time_index(grid: &AdfGrid, t: u32) -> Result<usize, Error> {
    grid.t
        .iter()
        .position(|&v| v == t)
        .ok_or_else(|| Error::invalid(format!("t = {t} not in the fitted grid")))
}
