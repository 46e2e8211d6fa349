//! C ABI over `dqm-core`.
//!
//! Every fallible function returns a [`DqmStatus`]; on failure the message is available
//! from [`dqm_last_error`] on the same thread. Wavefunctions cross the boundary as opaque
//! [`DqmWaveFunction`] handles that must be released with [`dqm_wavefunction_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dqm_core::collapse::mean_collapse_time;
use dqm_core::constants::{minimum_measurable_length, PhysicalConstants};
use dqm_core::experiment::{load_config, run_experiment};
use dqm_core::grid::{gaussian_packet, Boundary, Grid1D, Units, WaveFunction};
use dqm_core::measure::position_density;
use dqm_core::propagator::{evolve, Hamiltonian1D};
use dqm_core::DqmError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DqmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numeric = 3,
    Timeout = 4,
    Config = 5,
    Domain = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DqmBoundary {
    Periodic = 0,
    HardWall = 1,
}

/// Opaque wavefunction handle.
pub struct DqmWaveFunction {
    psi: WaveFunction,
    units: Units,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &DqmError) -> DqmStatus {
    match e {
        DqmError::Config(_) => DqmStatus::Config,
        DqmError::InvalidInput(_)
        | DqmError::InvalidConstant { .. }
        | DqmError::Resolution(_)
        | DqmError::UnsupportedBoundary(_)
        | DqmError::GridMismatch(_)
        | DqmError::Inadmissible { .. } => DqmStatus::InvalidInput,
        DqmError::Timeout(_) => DqmStatus::Timeout,
        DqmError::Domain(_) => DqmStatus::Domain,
        DqmError::Io(_) => DqmStatus::Io,
        _ => DqmStatus::Numeric,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (DqmStatus, String)>) -> DqmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DqmStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DqmStatus::Panic
        }
    }
}

fn core<T>(r: dqm_core::Result<T>) -> Result<T, (DqmStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (DqmStatus, String) {
    (DqmStatus::NullPointer, format!("{what} is null"))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dqm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the next failure.
#[no_mangle]
pub extern "C" fn dqm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Normalized Gaussian packet on a new lattice.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dqm_gaussian_new(
    x_min: f64,
    x_max: f64,
    n_points: usize,
    boundary: DqmBoundary,
    dt: f64,
    x0: f64,
    sigma: f64,
    p0: f64,
    hbar: f64,
    mass: f64,
    out: *mut *mut DqmWaveFunction,
) -> DqmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let boundary = match boundary {
            DqmBoundary::Periodic => Boundary::Periodic,
            DqmBoundary::HardWall => Boundary::HardWall,
        };
        let grid = core(Grid1D::new(x_min, x_max, n_points, boundary, dt))?;
        let units = core(Units::new(hbar, mass))?;
        let psi = core(gaussian_packet(&grid, x0, sigma, p0, units))?;
        *out = Box::into_raw(Box::new(DqmWaveFunction { psi, units }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `handle` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dqm_wavefunction_free(handle: *mut DqmWaveFunction) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of lattice sites, 0 for a null handle.
///
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dqm_wavefunction_len(handle: *const DqmWaveFunction) -> usize {
    handle.as_ref().map_or(0, |h| h.psi.grid().len())
}

/// `∫|ψ|² dx`.
///
/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dqm_wavefunction_norm(handle: *const DqmWaveFunction, out: *mut f64) -> DqmStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = h.psi.norm_sq();
        Ok(())
    })
}

/// Evolves in place under the free Hamiltonian for `t_final` (rounded to whole steps).
///
/// # Safety
/// `handle` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dqm_wavefunction_evolve_free(handle: *mut DqmWaveFunction, t_final: f64) -> DqmStatus {
    guard(|| {
        let h = handle.as_mut().ok_or_else(|| null("handle"))?;
        let ham = Hamiltonian1D::free(*h.psi.grid(), h.units);
        h.psi = core(evolve(&h.psi, &ham, t_final, |_, _| {}))?;
        Ok(())
    })
}

/// Copies `|ψ|²` into `buffer`, which must hold at least `dqm_wavefunction_len` values.
///
/// # Safety
/// `buffer` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dqm_wavefunction_density(
    handle: *const DqmWaveFunction,
    buffer: *mut f64,
    len: usize,
) -> DqmStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        let rho = position_density(&h.psi);
        if len < rho.len() {
            return Err((
                DqmStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", rho.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buffer, rho.len()).copy_from_slice(&rho);
        Ok(())
    })
}

/// Minimum of `δL_QM + δL_GR` over clock mass for a length `length`, in natural units
/// when `natural_units` is non-zero, else SI.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn dqm_minimum_measurable_length(
    length: f64,
    natural_units: i32,
    out_min: *mut f64,
    out_mass: *mut f64,
) -> DqmStatus {
    guard(|| {
        let min = out_min.as_mut().ok_or_else(|| null("out_min"))?;
        let mass = out_mass.as_mut().ok_or_else(|| null("out_mass"))?;
        let k = if natural_units != 0 {
            PhysicalConstants::natural()
        } else {
            PhysicalConstants::si()
        };
        let r = core(minimum_measurable_length(length, &k))?;
        *min = r.min_uncertainty;
        *mass = r.optimal_mass;
        Ok(())
    })
}

/// Monte Carlo mean collapse time in Planck times for a gap `delta_e` given in Planck energies.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn dqm_mean_collapse_time(
    delta_e: f64,
    rho0: f64,
    trials: u64,
    seed: u64,
    out_tau: *mut f64,
    out_stderr: *mut f64,
) -> DqmStatus {
    guard(|| {
        let tau = out_tau.as_mut().ok_or_else(|| null("out_tau"))?;
        let se = out_stderr.as_mut().ok_or_else(|| null("out_stderr"))?;
        let k = PhysicalConstants::natural();
        let stats = core(mean_collapse_time(delta_e, rho0, trials, &k, seed))?;
        *tau = stats.tau_c;
        *se = stats.stderr;
        Ok(())
    })
}

/// Runs a JSON experiment config in memory and returns its summary as a JSON string,
/// to be released with [`dqm_string_free`]. Nothing is written to disk.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dqm_run_config_json(config_json: *const c_char, out: *mut *mut c_char) -> DqmStatus {
    guard(|| {
        if config_json.is_null() {
            return Err(null("config_json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|e| (DqmStatus::InvalidInput, format!("config is not UTF-8: {e}")))?;
        let config = core(load_config(text))?;
        let output = core(run_experiment(&config))?;
        let json = output.summary_json();
        *out = CString::new(json).expect("json has no nul").into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dqm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
