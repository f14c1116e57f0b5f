//! C interface to `khsim`.
//!
//! Simulations are opaque handles created by [`khsim_run`] or
//! [`khsim_run_preset`] and released with [`khsim_simulation_free`]. Every
//! fallible call returns a [`KhsimStatus`]; on failure the message is kept
//! per thread and read with [`khsim_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use khsim::cli::{parse_config, preset, run_scenario, Outcome};
use khsim::netlist::parse_value;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KhsimStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Netlist, configuration or preset rejected.
    InvalidInput = 3,
    /// The integration or the analysis failed numerically.
    Numerical = 4,
    /// Index or buffer size out of range.
    OutOfRange = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// A finished run: traces plus synchronization report.
pub struct KhsimSimulation {
    outcome: Outcome,
}

/// Synchronization metrics of the compared pair.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KhsimSyncReport {
    /// Start of strict synchronization (s); infinity if never reached.
    pub transient_time: f64,
    /// Start of phase locking (s); infinity if never reached.
    pub lock_time: f64,
    pub phase_lag: f64,
    pub amplitude_ratio: f64,
    pub steady_amplitude_a: f64,
    pub steady_amplitude_b: f64,
    pub decay_rate: f64,
    pub strict_sync: bool,
    pub phase_locked: bool,
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

fn fail(status: KhsimStatus, message: impl Into<String>) -> KhsimStatus {
    set_error(message);
    status
}

/// Runs `body` with panics turned into [`KhsimStatus::Internal`].
fn guard(body: impl FnOnce() -> KhsimStatus) -> KhsimStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(KhsimStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, KhsimStatus> {
    if p.is_null() {
        return Err(fail(KhsimStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(KhsimStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn status_of(e: &khsim::Error) -> KhsimStatus {
    if e.is_numerical() {
        KhsimStatus::Numerical
    } else {
        KhsimStatus::InvalidInput
    }
}

fn store(result: khsim::Result<Outcome>, out: *mut *mut KhsimSimulation) -> KhsimStatus {
    match result {
        Ok(outcome) => {
            // SAFETY: callers checked `out` for null
            unsafe { *out = Box::into_raw(Box::new(KhsimSimulation { outcome })) };
            KhsimStatus::Ok
        }
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn khsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn khsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a value with an optional engineering suffix (`"1.01p"`).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn khsim_parse_value(text: *const c_char, out: *mut f64) -> KhsimStatus {
    guard(|| {
        if out.is_null() {
            return fail(KhsimStatus::NullPointer, "out is null");
        }
        let text = match read_str(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_value(text) {
            Ok(v) => {
                *out = v;
                KhsimStatus::Ok
            }
            Err(e) => fail(KhsimStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Simulates a netlist with an INI configuration.
///
/// # Safety
/// Both strings must be NUL-terminated; `out` must be a valid pointer. On
/// success `*out` owns a handle to release with [`khsim_simulation_free`].
#[no_mangle]
pub unsafe extern "C" fn khsim_run(netlist: *const c_char, config: *const c_char, out: *mut *mut KhsimSimulation) -> KhsimStatus {
    guard(|| {
        if out.is_null() {
            return fail(KhsimStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let (netlist, config) = match (read_str(netlist, "netlist"), read_str(config, "config")) {
            (Ok(n), Ok(c)) => (n, c),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let config = match parse_config(config) {
            Ok(c) => c,
            Err(e) => return fail(KhsimStatus::InvalidInput, format!("config: {e}")),
        };
        store(run_scenario(netlist, &config), out)
    })
}

/// Simulates a built-in scenario such as `"regime1"`.
///
/// # Safety
/// `name` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn khsim_run_preset(name: *const c_char, out: *mut *mut KhsimSimulation) -> KhsimStatus {
    guard(|| {
        if out.is_null() {
            return fail(KhsimStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let name = match read_str(name, "name") {
            Ok(n) => n,
            Err(s) => return s,
        };
        let p = match preset(name) {
            Ok(p) => p,
            Err(e) => return fail(KhsimStatus::InvalidInput, e.to_string()),
        };
        store(run_scenario(&p.netlist, &p.config), out)
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `sim` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn khsim_simulation_free(sim: *mut KhsimSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// # Safety
/// `sim` must be null or a live handle.
unsafe fn handle<'a>(sim: *const KhsimSimulation) -> Result<&'a KhsimSimulation, KhsimStatus> {
    sim.as_ref().ok_or_else(|| fail(KhsimStatus::NullPointer, "simulation is null"))
}

/// Number of samples and of degrees of freedom.
///
/// # Safety
/// `sim` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn khsim_simulation_shape(sim: *const KhsimSimulation, samples: *mut usize, dofs: *mut usize) -> KhsimStatus {
    guard(|| {
        let sim = match handle(sim) {
            Ok(s) => s,
            Err(s) => return s,
        };
        if samples.is_null() || dofs.is_null() {
            return fail(KhsimStatus::NullPointer, "output pointer is null");
        }
        let series = sim.outcome.series();
        *samples = series.len();
        *dofs = series.n_dof();
        KhsimStatus::Ok
    })
}

/// Which trace [`khsim_simulation_trace`] copies.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KhsimTrace {
    /// Sample times (s); `dof` is ignored.
    Time = 0,
    /// Normalized charge of `dof`.
    Charge = 1,
    /// Normalized flux of `dof`.
    Flux = 2,
    /// Energy (J); `dof` is ignored.
    Energy = 3,
}

/// Copies a trace into `buf`, which must hold at least `len` samples.
///
/// # Safety
/// `sim` must be a live handle, `trace` one of the [`KhsimTrace`] values and
/// `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn khsim_simulation_trace(
    sim: *const KhsimSimulation,
    trace: KhsimTrace,
    dof: usize,
    buf: *mut f64,
    len: usize,
) -> KhsimStatus {
    guard(|| {
        let sim = match handle(sim) {
            Ok(s) => s,
            Err(s) => return s,
        };
        if buf.is_null() {
            return fail(KhsimStatus::NullPointer, "buffer is null");
        }
        let series = sim.outcome.series();
        if matches!(trace, KhsimTrace::Charge | KhsimTrace::Flux) && dof >= series.n_dof() {
            return fail(KhsimStatus::OutOfRange, format!("dof {dof} out of range ({} DOFs)", series.n_dof()));
        }
        let data: &[f64] = match trace {
            KhsimTrace::Time => &series.times,
            KhsimTrace::Charge => &series.charge[dof],
            KhsimTrace::Flux => &series.flux[dof],
            KhsimTrace::Energy => &series.energy,
        };
        if len < data.len() {
            return fail(KhsimStatus::OutOfRange, format!("buffer holds {len} samples, need {}", data.len()));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        KhsimStatus::Ok
    })
}

/// Synchronization metrics of the run.
///
/// # Safety
/// `sim` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn khsim_simulation_sync(sim: *const KhsimSimulation, out: *mut KhsimSyncReport) -> KhsimStatus {
    guard(|| {
        let sim = match handle(sim) {
            Ok(s) => s,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(KhsimStatus::NullPointer, "out is null");
        }
        let s = &sim.outcome.sync;
        *out = KhsimSyncReport {
            transient_time: s.transient_time,
            lock_time: s.lock_time,
            phase_lag: s.phase_lag,
            amplitude_ratio: s.amplitude_ratio,
            steady_amplitude_a: s.steady_amplitudes[0],
            steady_amplitude_b: s.steady_amplitudes[1],
            decay_rate: s.decay_rate,
            strict_sync: s.strict_sync,
            phase_locked: s.phase_locked,
        };
        KhsimStatus::Ok
    })
}
