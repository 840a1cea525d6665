//! C ABI over the pme-lab core.
//!
//! Every object is an opaque handle created by a `pme_*_new`/`pme_*_solve`
//! call and released by the matching `pme_*_free`. Every fallible call
//! returns a [`PmeStatus`]; the message of the most recent failure on the
//! calling thread is available through [`pme_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use pme_lab::config::ExperimentConfig;
use pme_lab::evolution::{evolve_pme, EvolveOptions, Schedule, Trajectory};
use pme_lab::geometry::{build_grid, Grid, GridKind};
use pme_lab::runner::run;
use pme_lab::spectrum::{assemble_linearized, solve_eigenpairs, EigenSystem};
use pme_lab::stationary::{solve_theta, StationaryProfile};
use pme_lab::Error;

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonConvergence = 3,
    NumericalFailure = 4,
    BufferTooSmall = 5,
    Io = 6,
    ChecksFailed = 7,
    Panic = 8,
}

/// Grid family.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmeGridKind {
    Interval = 0,
    Radial = 1,
}

/// Opaque grid handle.
pub struct PmeGrid(Grid);
/// Opaque stationary-profile handle.
pub struct PmeProfile(StationaryProfile);
/// Opaque eigensystem handle.
pub struct PmeEigenSystem(EigenSystem);
/// Opaque trajectory handle.
pub struct PmeTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut buf = e.borrow_mut();
        buf.clear();
        buf.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(err: &Error) -> PmeStatus {
    match err {
        Error::InvalidGrid(_)
        | Error::GridMismatch
        | Error::InvalidWeight(_)
        | Error::DivergentWeight { .. }
        | Error::InvalidTime(_)
        | Error::InvalidInitialData(_)
        | Error::InvalidEigenRequest(_)
        | Error::IncompatibleTrajectories(_)
        | Error::WindowTooSmall(_)
        | Error::ConfigInvalid(_) => PmeStatus::InvalidArgument,
        Error::NonConvergence { .. }
        | Error::IterationStall { .. }
        | Error::QuadratureFailure(_)
        | Error::NotConverged { .. }
        | Error::FitDiverged(_) => PmeStatus::NonConvergence,
        Error::Io(_) => PmeStatus::Io,
        _ => PmeStatus::NumericalFailure,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (PmeStatus, String)>) -> PmeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PmeStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PmeStatus::Panic
        }
    }
}

fn lift(err: Error) -> (PmeStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (PmeStatus, String) {
    (PmeStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (PmeStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (PmeStatus, String)> {
    if len < src.len() {
        return Err((PmeStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", src.len())));
    }
    if buf.is_null() {
        return Err(null("buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pme_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pme_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds a uniform vertex-centred grid with `n` interior nodes.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pme_grid_new(kind: PmeGridKind, dim: usize, size: f64, n: usize, out: *mut *mut PmeGrid) -> PmeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let kind = match kind {
            PmeGridKind::Interval => GridKind::Interval,
            PmeGridKind::Radial => GridKind::Radial,
        };
        let grid = build_grid(kind, dim, size, n).map_err(lift)?;
        store(out, PmeGrid(grid));
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle from [`pme_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pme_grid_free(grid: *mut PmeGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of interior nodes, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pme_grid_len(grid: *const PmeGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.n())
}

/// Copies node coordinates into `buf`.
///
/// # Safety
/// `grid` must be a live handle; `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pme_grid_nodes(grid: *const PmeGrid, buf: *mut f64, len: usize) -> PmeStatus {
    guard(|| copy_out(handle(grid, "grid")?.0.nodes(), buf, len))
}

/// Solves for the stationary profile `Θ` with exponent `p` in (0, 1).
///
/// # Safety
/// `grid` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pme_profile_solve(grid: *const PmeGrid, p: f64, tol: f64, out: *mut *mut PmeProfile) -> PmeStatus {
    guard(|| {
        let grid = handle(grid, "grid")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let profile = solve_theta(&grid.0, p, tol).map_err(lift)?;
        store(out, PmeProfile(profile));
        Ok(())
    })
}

/// # Safety
/// `profile` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pme_profile_free(profile: *mut PmeProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Copies `Θ` at the grid nodes into `buf`.
///
/// # Safety
/// `profile` must be a live handle; `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pme_profile_theta(profile: *const PmeProfile, buf: *mut f64, len: usize) -> PmeStatus {
    guard(|| copy_out(handle(profile, "profile")?.0.theta.values(), buf, len))
}

/// Copies `S = Θ^p` at the grid nodes into `buf`.
///
/// # Safety
/// `profile` must be a live handle; `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pme_profile_s(profile: *const PmeProfile, buf: *mut f64, len: usize) -> PmeStatus {
    guard(|| copy_out(handle(profile, "profile")?.0.s_profile.values(), buf, len))
}

/// Boundary slope of `Θ`.
///
/// # Safety
/// `profile` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pme_profile_slope(profile: *const PmeProfile, out: *mut f64) -> PmeStatus {
    guard(|| {
        let profile = handle(profile, "profile")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = profile.0.slope_a;
        Ok(())
    })
}

/// Lowest `k` eigenpairs of the operator linearized about `profile`.
///
/// # Safety
/// `profile` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pme_spectrum_solve(profile: *const PmeProfile, k: usize, tol: f64, out: *mut *mut PmeEigenSystem) -> PmeStatus {
    guard(|| {
        let profile = handle(profile, "profile")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let pencil = assemble_linearized(&profile.0.grid, &profile.0, profile.0.p).map_err(lift)?;
        let sys = solve_eigenpairs(&pencil, k, tol).map_err(lift)?;
        store(out, PmeEigenSystem(sys));
        Ok(())
    })
}

/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pme_spectrum_free(sys: *mut PmeEigenSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of computed eigenpairs, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pme_spectrum_len(sys: *const PmeEigenSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.0.mus.len())
}

unsafe fn mode<'a>(sys: *const PmeEigenSystem, j: usize) -> Result<(&'a EigenSystem, usize), (PmeStatus, String)> {
    let sys = &handle(sys, "eigensystem")?.0;
    if j == 0 || j > sys.mus.len() {
        return Err((PmeStatus::InvalidArgument, format!("mode {j} outside 1..={}", sys.mus.len())));
    }
    Ok((sys, j - 1))
}

/// Eigenvalue `mu_j`, with `j` counted from 1.
///
/// # Safety
/// `sys` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pme_spectrum_eigenvalue(sys: *const PmeEigenSystem, j: usize, out: *mut f64) -> PmeStatus {
    guard(|| {
        let (sys, i) = mode(sys, j)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = sys.mus[i];
        Ok(())
    })
}

/// Weighted-orthonormal eigenvector `psi_j`, with `j` counted from 1.
///
/// # Safety
/// `sys` must be a live handle; `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pme_spectrum_eigenvector(sys: *const PmeEigenSystem, j: usize, buf: *mut f64, len: usize) -> PmeStatus {
    guard(|| {
        let (sys, i) = mode(sys, j)?;
        copy_out(sys.psis[i].values(), buf, len)
    })
}

/// Marches `u_t = Δ(u^m)` from `u0` to `t_end` with constant step `dt`,
/// storing every `store_every`-th state.
///
/// # Safety
/// `grid` must be a live handle; `u0` valid for `len` doubles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pme_evolve(
    grid: *const PmeGrid,
    m: f64,
    u0: *const f64,
    len: usize,
    dt: f64,
    t_end: f64,
    store_every: usize,
    out: *mut *mut PmeTrajectory,
) -> PmeStatus {
    guard(|| {
        let grid = &handle(grid, "grid")?.0;
        if u0.is_null() {
            return Err(null("u0"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        if len != grid.n() {
            return Err((PmeStatus::InvalidArgument, format!("u0 has {len} values, grid has {}", grid.n())));
        }
        let values = std::slice::from_raw_parts(u0, len).to_vec();
        let field = grid.field(values).map_err(lift)?;
        let traj = evolve_pme(grid, m, &field, t_end, Schedule::Fixed { dt, store_every }, EvolveOptions::default()).map_err(lift)?;
        store(out, PmeTrajectory(traj));
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pme_trajectory_free(traj: *mut PmeTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of stored snapshots, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pme_trajectory_len(traj: *const PmeTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.times.len())
}

unsafe fn snapshot<'a>(traj: *const PmeTrajectory, k: usize) -> Result<(&'a Trajectory, usize), (PmeStatus, String)> {
    let traj = &handle(traj, "trajectory")?.0;
    if k >= traj.times.len() {
        return Err((PmeStatus::InvalidArgument, format!("snapshot {k} outside 0..{}", traj.times.len())));
    }
    Ok((traj, k))
}

/// Time of snapshot `k`, counted from 0.
///
/// # Safety
/// `traj` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pme_trajectory_time(traj: *const PmeTrajectory, k: usize, out: *mut f64) -> PmeStatus {
    guard(|| {
        let (traj, k) = snapshot(traj, k)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = traj.times[k];
        Ok(())
    })
}

/// State of snapshot `k`, counted from 0.
///
/// # Safety
/// `traj` must be a live handle; `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pme_trajectory_field(traj: *const PmeTrajectory, k: usize, buf: *mut f64, len: usize) -> PmeStatus {
    guard(|| {
        let (traj, k) = snapshot(traj, k)?;
        copy_out(traj.fields[k].values(), buf, len)
    })
}

/// Runs the experiments of a TOML config file. Returns
/// [`PmeStatus::ChecksFailed`] when the run completes but a check fails.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pme_run_config(path: *const c_char) -> PmeStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (PmeStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let cfg = ExperimentConfig::load(&PathBuf::from(path)).map_err(lift)?;
        let record = run(&cfg).map_err(lift)?;
        if record.passed() {
            Ok(())
        } else {
            let failed: Vec<&str> = record.checks.iter().filter(|c| !c.pass).map(|c| c.criterion.as_str()).collect();
            Err((PmeStatus::ChecksFailed, format!("failed checks: {}", failed.join(", "))))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_categories() {
        assert_eq!(status_of(&Error::ConfigInvalid("x".into())), PmeStatus::InvalidArgument);
        assert_eq!(status_of(&Error::NonConvergence { iterations: 3, residual: 1.0 }), PmeStatus::NonConvergence);
        assert_eq!(status_of(&Error::PositivityLoss { tau: 1.0 }), PmeStatus::NumericalFailure);
        assert_eq!(status_of(&Error::Io("x".into())), PmeStatus::Io);
    }

    #[test]
    fn last_error_truncates_and_terminates() {
        set_error("abcdef");
        let mut buf = [1 as c_char; 4];
        let n = unsafe { pme_last_error(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(n, 6);
        assert_eq!(buf, [b'a' as c_char, b'b' as c_char, b'c' as c_char, 0]);
    }

    #[test]
    fn panics_become_status() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, PmeStatus::Panic);
        assert_eq!(unsafe { pme_last_error(ptr::null_mut(), 0) }, "internal panic".len());
    }
}
