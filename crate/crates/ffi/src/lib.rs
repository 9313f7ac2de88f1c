//! C ABI over `blowup-core`.
//!
//! Configurations and trajectories are opaque handles created and released
//! by this library. Every fallible call returns a [`BlowupStatus`]; the
//! message of the last failure on the calling thread is available through
//! [`blowup_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use blowup_core::checks::{basis_suite, verify_record};
use blowup_core::config::Config;
use blowup_core::decomposition::Component;
use blowup_core::shooting::{
    run_trajectory, search, RunOptions, RunStatus, SearchOptions, SearchStatus, ShootParams, TrajectoryRecord,
};
use blowup_core::{hermite, io, kernel, profile, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownKey = 3,
    Diverged = 4,
    Io = 5,
    OutOfRange = 6,
    Failed = 7,
    Panic = 8,
}

/// Opaque configuration handle.
pub struct BlowupConfig(Config);

/// Opaque trajectory handle.
pub struct BlowupTrajectory(TrajectoryRecord);

/// One observer tick.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BlowupTick {
    pub s: f64,
    pub q_modes: [f64; 3],
    pub qt_modes: [f64; 3],
    /// Bound usage of each component, in the order q0, q1, q2, q-, qe,
    /// qt0, qt1, qt2, qt-, qte.
    pub usage: [f64; 10],
    pub member: bool,
    /// Index of the most used component.
    pub worst: i32,
}

/// How a trajectory ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupRunStatus {
    Trapped = 0,
    Exited = 1,
    Diverged = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BlowupExit {
    pub status: BlowupRunStatus,
    pub s_exit: f64,
    /// Component index, or -1 when the run never left the set.
    pub mode: i32,
    pub sign: f64,
    pub crossing_rate: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> BlowupStatus {
    match err {
        Error::UnknownKey(_) => BlowupStatus::UnknownKey,
        Error::BadValue { .. } | Error::InvalidParameter { .. } | Error::UnsupportedDegree { .. } => {
            BlowupStatus::InvalidArgument
        }
        Error::Diverged { .. } => BlowupStatus::Diverged,
        Error::Io(_) | Error::Malformed { .. } => BlowupStatus::Io,
        Error::OutsideWindow(_) | Error::GridTooNarrow { .. } => BlowupStatus::OutOfRange,
        _ => BlowupStatus::Failed,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (BlowupStatus, String)>) -> BlowupStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BlowupStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            BlowupStatus::Panic
        }
    }
}

fn core<T>(r: blowup_core::Result<T>) -> Result<T, (BlowupStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (BlowupStatus, String) {
    (BlowupStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (BlowupStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (BlowupStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (BlowupStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn blowup_last_error(buf: *mut c_char, len: usize) -> usize {
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

/// `h_m(y)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blowup_hermite(m: usize, y: f64, out: *mut f64) -> BlowupStatus {
    guard(|| {
        *out_arg(out, "out")? = core(hermite::hermite(m, y))?;
        Ok(())
    })
}

/// `2^m m!`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blowup_hermite_norm_sq(m: usize, out: *mut f64) -> BlowupStatus {
    guard(|| {
        *out_arg(out, "out")? = core(hermite::hermite_norm_sq(m))?;
        Ok(())
    })
}

/// Kernel of `exp(psi L)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blowup_mehler_kernel(psi: f64, y: f64, x: f64, out: *mut f64) -> BlowupStatus {
    guard(|| {
        *out_arg(out, "out")? = core(kernel::mehler_kernel(psi, y, x))?;
        Ok(())
    })
}

/// `f(z) = 8 / (8 + z^2)`.
#[no_mangle]
pub extern "C" fn blowup_profile_f(z: f64) -> f64 {
    profile::f_profile(z)
}

/// `phi(y, s) = f(y / sqrt(s)) + 1 / (4 s)`.
#[no_mangle]
pub extern "C" fn blowup_profile_phi(y: f64, s: f64) -> f64 {
    profile::phi(y, s)
}

/// Runs the basis and kernel property suite; `corrupt_norm < 0` disables
/// the fault hook.
///
/// # Safety
/// `passed` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blowup_basis_check(corrupt_norm: i32, passed: *mut bool) -> BlowupStatus {
    guard(|| {
        let out = out_arg(passed, "passed")?;
        let hook = usize::try_from(corrupt_norm).ok();
        let results = core(basis_suite(hook))?;
        *out = results.iter().all(|r| r.passed());
        if let Some(r) = results.iter().find(|r| !r.passed()) {
            set_error(format!("property failed: {}", r.name));
        }
        Ok(())
    })
}

/// New configuration with default values. Release with
/// [`blowup_config_free`].
#[no_mangle]
pub extern "C" fn blowup_config_new() -> *mut BlowupConfig {
    Box::into_raw(Box::new(BlowupConfig(Config::default())))
}

/// # Safety
/// `cfg` must come from [`blowup_config_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn blowup_config_free(cfg: *mut BlowupConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Sets one key.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn blowup_config_set(
    cfg: *mut BlowupConfig,
    key: *const c_char,
    value: *const c_char,
) -> BlowupStatus {
    guard(|| {
        let cfg = out_arg(cfg, "cfg")?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        core(cfg.0.set(key, value))
    })
}

/// Applies a `key = value` file on top of the current values.
///
/// # Safety
/// `cfg` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn blowup_config_load(cfg: *mut BlowupConfig, path: *const c_char) -> BlowupStatus {
    guard(|| {
        let cfg = out_arg(cfg, "cfg")?;
        let path = str_arg(path, "path")?;
        let text = std::fs::read_to_string(path).map_err(|e| (BlowupStatus::Io, e.to_string()))?;
        core(cfg.0.apply_text(&text))
    })
}

fn validated(cfg: &BlowupConfig) -> Result<&Config, (BlowupStatus, String)> {
    core(cfg.0.validate())?;
    Ok(&cfg.0)
}

fn into_handle(rec: TrajectoryRecord) -> *mut BlowupTrajectory {
    Box::into_raw(Box::new(BlowupTrajectory(rec)))
}

/// Runs one trajectory with `params = (d0, d1, dt0, dt1)` up to the
/// configured horizon, keeping snapshots. It stops at the first exit.
///
/// # Safety
/// `cfg` must be a live handle, `params` point to 4 doubles and `out` be
/// writable. Release the result with [`blowup_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn blowup_simulate(
    cfg: *const BlowupConfig,
    params: *const f64,
    out: *mut *mut BlowupTrajectory,
) -> BlowupStatus {
    guard(|| {
        let cfg = validated(cfg.as_ref().ok_or_else(|| null("cfg"))?)?;
        if params.is_null() {
            return Err(null("params"));
        }
        let out = out_arg(out, "out")?;
        let p = core(ShootParams::from_array(*params.cast::<[f64; 4]>()))?;
        let rec = core(run_trajectory(
            &p,
            &cfg.shrinking,
            &cfg.solver,
            cfg.s_max(),
            RunOptions {
                stop_on_exit: true,
                keep_snapshots: true,
            },
        ))?;
        *out = into_handle(rec);
        Ok(())
    })
}

/// Searches for a trapped trajectory and returns the best one with
/// snapshots. `trapped` reports whether the horizon was reached.
///
/// # Safety
/// `cfg` must be a live handle; `out` and `trapped` writable.
#[no_mangle]
pub unsafe extern "C" fn blowup_shoot(
    cfg: *const BlowupConfig,
    out: *mut *mut BlowupTrajectory,
    trapped: *mut bool,
) -> BlowupStatus {
    guard(|| {
        let cfg = validated(cfg.as_ref().ok_or_else(|| null("cfg"))?)?;
        let out = out_arg(out, "out")?;
        let trapped = out_arg(trapped, "trapped")?;
        let opts = SearchOptions {
            budget: cfg.run.budget,
            workers: cfg.run.workers,
            subspace: cfg.run.subspace,
        };
        let found = core(search(&cfg.shrinking, &cfg.solver, cfg.s_max(), &opts))?;
        let rec = core(run_trajectory(
            &found.best,
            &cfg.shrinking,
            &cfg.solver,
            cfg.s_max(),
            RunOptions {
                stop_on_exit: true,
                keep_snapshots: true,
            },
        ))?;
        *trapped = found.status == SearchStatus::Trapped && rec.is_trapped();
        *out = into_handle(rec);
        Ok(())
    })
}

/// Reads a trajectory directory.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn blowup_trajectory_load(dir: *const c_char, out: *mut *mut BlowupTrajectory) -> BlowupStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        let out = out_arg(out, "out")?;
        let (rec, _) = core(io::read_trajectory(Path::new(dir)))?;
        *out = into_handle(rec);
        Ok(())
    })
}

/// Writes a trajectory directory; `cfg` supplies the recorded settings.
///
/// # Safety
/// `traj` and `cfg` must be live handles; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn blowup_trajectory_write(
    traj: *const BlowupTrajectory,
    cfg: *const BlowupConfig,
    dir: *const c_char,
) -> BlowupStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let dir = str_arg(dir, "dir")?;
        core(io::write_trajectory(Path::new(dir), &traj.0, &cfg.0))
    })
}

/// # Safety
/// `traj` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn blowup_trajectory_free(traj: *mut BlowupTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of observer ticks, 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn blowup_trajectory_tick_count(traj: *const BlowupTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.ticks.len())
}

fn component_index(c: Component) -> i32 {
    Component::ALL.iter().position(|&x| x == c).map_or(-1, |i| i as i32)
}

/// Copies tick `index`.
///
/// # Safety
/// `traj` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn blowup_trajectory_tick(
    traj: *const BlowupTrajectory,
    index: usize,
    out: *mut BlowupTick,
) -> BlowupStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        let out = out_arg(out, "out")?;
        let t = traj.0.ticks.get(index).ok_or_else(|| {
            (
                BlowupStatus::OutOfRange,
                format!("tick {index} of {}", traj.0.ticks.len()),
            )
        })?;
        *out = BlowupTick {
            s: t.s,
            q_modes: t.q_modes,
            qt_modes: t.qt_modes,
            usage: t.usage,
            member: t.member,
            worst: component_index(t.worst),
        };
        Ok(())
    })
}

/// Copies the exit summary.
///
/// # Safety
/// `traj` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn blowup_trajectory_exit(traj: *const BlowupTrajectory, out: *mut BlowupExit) -> BlowupStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        let out = out_arg(out, "out")?;
        let rec = &traj.0;
        *out = BlowupExit {
            status: match rec.status {
                RunStatus::Trapped => BlowupRunStatus::Trapped,
                RunStatus::Exited => BlowupRunStatus::Exited,
                RunStatus::Diverged { .. } => BlowupRunStatus::Diverged,
            },
            s_exit: rec.exit.s_exit,
            mode: rec.exit.mode.component().map_or(-1, component_index),
            sign: rec.exit.sign,
            crossing_rate: rec.exit.crossing_rate,
        };
        Ok(())
    })
}

/// Copies `(d0, d1, dt0, dt1)`.
///
/// # Safety
/// `traj` must be a live handle; `out` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn blowup_trajectory_params(traj: *const BlowupTrajectory, out: *mut f64) -> BlowupStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out.cast::<[f64; 4]>() = traj.0.params.to_array();
        Ok(())
    })
}

/// Runs every reconstruction check on a trajectory, using the verification
/// settings of `cfg`. `passed` is true when all checks pass.
///
/// # Safety
/// `traj` and `cfg` must be live handles; `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn blowup_verify(
    traj: *const BlowupTrajectory,
    cfg: *const BlowupConfig,
    passed: *mut bool,
) -> BlowupStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let passed = out_arg(passed, "passed")?;
        let report = core(verify_record(&traj.0, &cfg.0.verify))?;
        *passed = report.passed();
        if let Some(c) = report.checks.iter().find(|c| !c.passed) {
            set_error(format!("check failed: {} ({})", c.name, c.detail));
        }
        Ok(())
    })
}
