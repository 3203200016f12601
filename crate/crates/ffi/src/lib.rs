//! C ABI for the `vstate` library.
//!
//! Every function returns a [`VsStatus`]; results go through out-pointers.
//! Solved states and traced branches are opaque handles released with
//! their `_free` function. The message of the most recent failure on the
//! calling thread is available from [`vs_last_error`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vstate::continuation::{limiting_estimate, seed_from_bifurcation, trace_branch, LimitingKind, LimitingThresholds};
use vstate::solver::{newton_solve, NewtonConfig, NewtonReport};
use vstate::spectra;
use vstate::{Branch, BranchSelector, ContinuationConfig, Error, Problem, Shape, SpectralGrid};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VsStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Precondition = 3,
    Domain = 4,
    Geometry = 5,
    Singular = 6,
    NoBifurcation = 7,
    NotConverged = 8,
    Io = 9,
    BufferTooSmall = 10,
    OutOfRange = 11,
    Panic = 12,
}

/// Which bifurcation point a branch starts from.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VsBranchKind {
    Disc = 0,
    Plus = 1,
    Minus = 2,
}

/// Eigenvalue data of one annulus mode. The eigenvalue fields are valid
/// only when `has_real` is nonzero.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VsDcSpectrum {
    pub discriminant: f64,
    pub has_real: i32,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
}

/// Diagnostics of one branch point. `gap_boundaries` and
/// `a_inner_first` are NaN for disc patches.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VsBranchPoint {
    pub omega: f64,
    pub a_first: f64,
    pub a_inner_first: f64,
    pub sup_residual: f64,
    pub gap_unit_circle: f64,
    pub gap_boundaries: f64,
    pub nodes: usize,
}

/// A Newton result.
pub struct VsState {
    problem: Problem,
    coeffs: Vec<f64>,
    report: NewtonReport,
}

/// A traced branch.
pub struct VsBranch {
    branch: Branch,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> VsStatus {
    match e {
        Error::Config(_) | Error::Json(_) => VsStatus::Config,
        Error::Precondition(_) => VsStatus::Precondition,
        Error::Domain(_) | Error::Instability { .. } => VsStatus::Domain,
        Error::Degenerate(_) | Error::Geometry(_) => VsStatus::Geometry,
        Error::Singular { .. } => VsStatus::Singular,
        Error::NoBifurcation(_) | Error::Seed(_) => VsStatus::NoBifurcation,
        Error::Io(_) => VsStatus::Io,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<VsStatus, Error>) -> VsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            VsStatus::Panic
        }
    }
}

macro_rules! out {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(r) => r,
            None => {
                set_error(concat!("null pointer: ", stringify!($p)).into());
                return Ok(VsStatus::NullPointer);
            }
        }
    };
}

macro_rules! input {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(r) => r,
            None => {
                set_error(concat!("null pointer: ", stringify!($p)).into());
                return Ok(VsStatus::NullPointer);
            }
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vs_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL, or
/// 0 when there is none.
#[no_mangle]
pub unsafe extern "C" fn vs_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
        None => 0,
    })
}

/// `λ_m` and `Ω_m` of the disc of radius `b`.
#[no_mangle]
pub unsafe extern "C" fn vs_sc_eigen(m: usize, b: f64, lambda: *mut f64, omega: *mut f64) -> VsStatus {
    guard(|| {
        let (l, o) = (out!(lambda), out!(omega));
        (*l, *o) = spectra::sc_eigen(m, b)?;
        Ok(VsStatus::Ok)
    })
}

/// Eigenvalues of mode `n` around the annulus `b2 < |z| < b1`.
#[no_mangle]
pub unsafe extern "C" fn vs_dc_spectrum(n: usize, b1: f64, b2: f64, out: *mut VsDcSpectrum) -> VsStatus {
    guard(|| {
        let o = out!(out);
        let s = spectra::dc_spectrum(n, b1, b2)?;
        *o = VsDcSpectrum {
            discriminant: s.discriminant,
            has_real: s.has_real_eigenvalues() as i32,
            lambda_plus: s.lambda_plus.unwrap_or(f64::NAN),
            lambda_minus: s.lambda_minus.unwrap_or(f64::NAN),
            omega_plus: s.omega_plus.unwrap_or(f64::NAN),
            omega_minus: s.omega_minus.unwrap_or(f64::NAN),
        };
        Ok(VsStatus::Ok)
    })
}

/// The 1-fold eigenvalues and the bifurcation velocity of `λ_1^+`.
#[no_mangle]
pub unsafe extern "C" fn vs_onefold_eigen(
    b1: f64,
    b2: f64,
    lambda_minus: *mut f64,
    lambda_plus: *mut f64,
    omega: *mut f64,
) -> VsStatus {
    guard(|| {
        let (a, b, c) = (out!(lambda_minus), out!(lambda_plus), out!(omega));
        (*a, *b, *c) = spectra::onefold_eigen(b1, b2)?;
        Ok(VsStatus::Ok)
    })
}

/// Fold radius `b_m^⋆` for the outer radius `b1`.
#[no_mangle]
pub unsafe extern "C" fn vs_b_star(m: usize, b1: f64, tol: f64, out: *mut f64) -> VsStatus {
    guard(|| {
        let o = out!(out);
        *o = spectra::b_star(m, b1, tol)?;
        Ok(VsStatus::Ok)
    })
}

/// Writes 1 to `out` when mode `m` bifurcates transversally.
#[no_mangle]
pub unsafe extern "C" fn vs_transversality_ok(m: usize, b1: f64, b2: f64, out: *mut i32) -> VsStatus {
    guard(|| {
        let o = out!(out);
        *o = spectra::transversality_ok(m, b1, b2)? as i32;
        Ok(VsStatus::Ok)
    })
}

fn shape_of(b1: f64, b2: f64) -> Result<Shape, Error> {
    if b2 > 0.0 {
        Shape::doubly(b1, b2)
    } else {
        Shape::simply(b1)
    }
}

/// Newton solve at fixed Ω on an `nodes`-point grid, starting from the
/// first-mode amplitudes `seed_a1` (outer) and `seed_a2` (inner).
///
/// Pass `b2 = 0` for a disc patch of radius `b1`. On success or
/// non-convergence a state handle is stored in `out`; non-convergence
/// returns `NotConverged`.
#[no_mangle]
pub unsafe extern "C" fn vs_solve(
    m: usize,
    b1: f64,
    b2: f64,
    omega: f64,
    nodes: usize,
    seed_a1: f64,
    seed_a2: f64,
    out: *mut *mut VsState,
) -> VsStatus {
    guard(|| {
        let o = out!(out);
        *o = ptr::null_mut();
        let p = Problem::new(shape_of(b1, b2)?, m, omega)?;
        let grid = SpectralGrid::new(nodes)?;
        let modes = p.modes(&grid)?;
        let mut x = vec![0.0; p.unknowns(&grid)?];
        x[0] = seed_a1;
        if p.shape.curves() == 2 {
            x[modes] = seed_a2;
        }
        let (coeffs, report) = newton_solve(&p, &x, &grid, &NewtonConfig::for_problem(&p))?;
        let converged = report.converged;
        *o = Box::into_raw(Box::new(VsState { problem: p, coeffs, report }));
        if !converged {
            set_error("Newton iteration did not converge".into());
            return Ok(VsStatus::NotConverged);
        }
        Ok(VsStatus::Ok)
    })
}

/// Number of coefficients of a state (`M` for discs, `2M` for annuli).
#[no_mangle]
pub unsafe extern "C" fn vs_state_len(state: *const VsState, out: *mut usize) -> VsStatus {
    guard(|| {
        let (s, o) = (input!(state), out!(out));
        *o = s.coeffs.len();
        Ok(VsStatus::Ok)
    })
}

/// Copies the coefficients into `buf` of capacity `len`.
#[no_mangle]
pub unsafe extern "C" fn vs_state_coeffs(state: *const VsState, buf: *mut f64, len: usize) -> VsStatus {
    guard(|| {
        let s = input!(state);
        if buf.is_null() {
            set_error("null pointer: buf".into());
            return Ok(VsStatus::NullPointer);
        }
        if len < s.coeffs.len() {
            set_error(format!("buffer holds {len} values, {} needed", s.coeffs.len()));
            return Ok(VsStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(s.coeffs.as_ptr(), buf, s.coeffs.len());
        Ok(VsStatus::Ok)
    })
}

/// Convergence flag, iteration count, residual sup-norm and the trivial flag.
#[no_mangle]
pub unsafe extern "C" fn vs_state_report(
    state: *const VsState,
    converged: *mut i32,
    iterations: *mut usize,
    sup_norm: *mut f64,
    trivial: *mut i32,
) -> VsStatus {
    guard(|| {
        let s = input!(state);
        let (c, i, r, t) = (out!(converged), out!(iterations), out!(sup_norm), out!(trivial));
        *c = s.report.converged as i32;
        *i = s.report.iterations;
        *r = s.report.final_sup_norm;
        *t = s.report.trivial as i32;
        Ok(VsStatus::Ok)
    })
}

/// Angular velocity of the state.
#[no_mangle]
pub unsafe extern "C" fn vs_state_omega(state: *const VsState, out: *mut f64) -> VsStatus {
    guard(|| {
        let (s, o) = (input!(state), out!(out));
        *o = s.problem.omega;
        Ok(VsStatus::Ok)
    })
}

#[no_mangle]
pub unsafe extern "C" fn vs_state_free(state: *mut VsState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Traces the m-fold branch from the chosen bifurcation point with default
/// continuation settings, starting on `nodes` points and refining up to
/// `max_nodes`. Pass `b2 = 0` and `VS_BRANCH_KIND_DISC` for disc patches.
#[no_mangle]
pub unsafe extern "C" fn vs_trace_branch(
    m: usize,
    b1: f64,
    b2: f64,
    kind: VsBranchKind,
    nodes: usize,
    max_nodes: usize,
    max_points: usize,
    epsilon: f64,
    out: *mut *mut VsBranch,
) -> VsStatus {
    guard(|| {
        let o = out!(out);
        *o = ptr::null_mut();
        let shape = shape_of(b1, b2)?;
        let sel = match kind {
            VsBranchKind::Disc => BranchSelector::Sc,
            VsBranchKind::Plus => BranchSelector::Plus,
            VsBranchKind::Minus => BranchSelector::Minus,
        };
        let grid = SpectralGrid::new(nodes)?;
        let seed = seed_from_bifurcation(shape, m, sel, epsilon, 0.0, &grid)?;
        let cfg = ContinuationConfig { max_nodes, max_points, ..ContinuationConfig::for_shape(&shape) };
        let branch = trace_branch(&seed, &grid, &cfg)?;
        *o = Box::into_raw(Box::new(VsBranch { branch }));
        Ok(VsStatus::Ok)
    })
}

#[no_mangle]
pub unsafe extern "C" fn vs_branch_len(branch: *const VsBranch, out: *mut usize) -> VsStatus {
    guard(|| {
        let (b, o) = (input!(branch), out!(out));
        *o = b.branch.points.len();
        Ok(VsStatus::Ok)
    })
}

#[no_mangle]
pub unsafe extern "C" fn vs_branch_point(branch: *const VsBranch, index: usize, out: *mut VsBranchPoint) -> VsStatus {
    guard(|| {
        let (b, o) = (input!(branch), out!(out));
        let Some(p) = b.branch.points.get(index) else {
            set_error(format!("index {index} past the {} branch points", b.branch.points.len()));
            return Ok(VsStatus::OutOfRange);
        };
        *o = VsBranchPoint {
            omega: p.omega,
            a_first: p.a_first,
            a_inner_first: p.a_inner_first.unwrap_or(f64::NAN),
            sup_residual: p.sup_residual,
            gap_unit_circle: p.gap_unit_circle,
            gap_boundaries: p.gap_boundaries.unwrap_or(f64::NAN),
            nodes: p.nodes,
        };
        Ok(VsStatus::Ok)
    })
}

/// Number of saddle-node folds recorded along the branch.
#[no_mangle]
pub unsafe extern "C" fn vs_branch_fold_count(branch: *const VsBranch, out: *mut usize) -> VsStatus {
    guard(|| {
        let (b, o) = (input!(branch), out!(out));
        *o = b.branch.fold_indices.len();
        Ok(VsStatus::Ok)
    })
}

/// How the branch ended: 0 boundary touching, 1 corner forming,
/// 2 inner/outer contact, 3 inconclusive.
#[no_mangle]
pub unsafe extern "C" fn vs_branch_limit_kind(branch: *const VsBranch, out: *mut i32) -> VsStatus {
    guard(|| {
        let (b, o) = (input!(branch), out!(out));
        let est = limiting_estimate(&b.branch, &LimitingThresholds::default())?;
        *o = match est.kind {
            LimitingKind::BoundaryTouching => 0,
            LimitingKind::CornerForming => 1,
            LimitingKind::InnerOuterContact => 2,
            LimitingKind::Inconclusive => 3,
        };
        Ok(VsStatus::Ok)
    })
}

#[no_mangle]
pub unsafe extern "C" fn vs_branch_free(branch: *mut VsBranch) {
    if !branch.is_null() {
        drop(Box::from_raw(branch));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let mut buf = vec![0 as c_char; 256];
        let n = unsafe { vs_last_error(buf.as_mut_ptr(), buf.len()) };
        assert!(n > 0);
        unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn eigen_through_the_abi() {
        let (mut l, mut o) = (0.0, 0.0);
        assert_eq!(unsafe { vs_sc_eigen(1, 0.6, &mut l, &mut o) }, VsStatus::Ok);
        assert!((o - 0.18).abs() < 1e-15);
        assert_eq!(unsafe { vs_sc_eigen(1, 1.5, &mut l, &mut o) }, VsStatus::Precondition);
        assert!(last_error().contains("radius"));
        assert_eq!(unsafe { vs_sc_eigen(1, 0.5, ptr::null_mut(), &mut o) }, VsStatus::NullPointer);
    }

    #[test]
    fn version_is_a_c_string() {
        let v = unsafe { CStr::from_ptr(vs_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
