//! C ABI for the polyhedral homotopy engine: opaque handles, status codes,
//! and flat `double` buffers with interleaved re/im pairs.
//!
//! Conventions:
//! - Every fallible call returns [`PhgStatus`]; `PHG_OK` is zero.
//! - A human-readable message for the most recent failure on the current
//!   thread is available through [`phg_last_error`].
//! - Complex buffers are row-major with interleaved `[re, im]` pairs, so a
//!   `p x N` complex matrix occupies `2 * p * N` doubles.
//! - Handles are created and destroyed by this library only; pass them back
//!   exactly once to the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};


use num_complex::Complex64;

use phg::eval::{default_batch_size, eval_scalar_oracle, evaluate_batch, PointBatch};
use phg::kernels::{BackendKind, ComplexMatrix};
use phg::system::{build_tables, homogenize, HomogenizedSystem, HomotopyTables, LaurentSystem};
use phg::tracker::{track_batch, EvalOptions, PathStatus, TrackOptions};
use phg::{
    assemble_bordered, euler_newton_unified, gen_chandra, gen_cyclic, gen_random, DirectionError,
    EvalError, LiftingSource, RandomSystemConfig, SystemError,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    ParseError = 3,
    ShapeError = 4,
    DuplicateMonomial = 5,
    EmptySupport = 6,
    InvalidLifting = 7,
    ZeroCoordinate = 8,
    MonomialOverflow = 9,
    SingularJacobian = 10,
    DegenerateTangent = 11,
    StartPointInvalid = 12,
    NumericalError = 13,
    UnknownBackend = 14,
    Utf8Error = 15,
}

/// Per-path termination codes reported by [`phg_track`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhgPathStatus {
    Converged = 0,
    SingularEncountered = 1,
    StepUnderflow = 2,
    MaxSteps = 3,
    Overflowed = 4,
}

impl From<PathStatus> for PhgPathStatus {
    fn from(s: PathStatus) -> Self {
        match s {
            PathStatus::Converged => PhgPathStatus::Converged,
            PathStatus::SingularEncountered => PhgPathStatus::SingularEncountered,
            PathStatus::StepUnderflow => PhgPathStatus::StepUnderflow,
            PathStatus::MaxSteps => PhgPathStatus::MaxSteps,
            PathStatus::Overflowed => PhgPathStatus::Overflowed,
        }
    }
}

/// Tracking options mirrored as a plain C struct. Obtain defaults from
/// [`phg_track_options_default`] and adjust fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PhgTrackOptions {
    pub tau0: f64,
    pub step_init: f64,
    pub step_min: f64,
    pub step_max: f64,
    pub newton_tol: f64,
    pub newton_max_iters: u32,
    pub shrink: f64,
    pub grow: f64,
    pub grow_after: u32,
    pub max_steps: u64,
    pub fixed_step_mode: bool,
    pub fixed_steps: u64,
    pub accept_tol: f64,
    pub start_tol: f64,
    pub skip_start_check: bool,
}

impl From<PhgTrackOptions> for TrackOptions {
    fn from(o: PhgTrackOptions) -> Self {
        TrackOptions {
            tau0: o.tau0,
            step_init: o.step_init,
            step_min: o.step_min,
            step_max: o.step_max,
            newton_tol: o.newton_tol,
            newton_max_iters: o.newton_max_iters,
            shrink: o.shrink,
            grow: o.grow,
            grow_after: o.grow_after,
            max_steps: o.max_steps,
            fixed_step_mode: o.fixed_step_mode,
            fixed_steps: o.fixed_steps,
            accept_tol: o.accept_tol,
            start_tol: o.start_tol,
            skip_start_check: o.skip_start_check,
        }
    }
}

/// Per-path result record filled by [`phg_track`]; final coordinates are
/// written to separate caller-provided buffers.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PhgPathResult {
    pub status: PhgPathStatus,
    pub tau: f64,
    pub residual: f64,
    pub steps: u64,
    pub newton_iters: u64,
    pub at_infinity: bool,
}

/// Opaque Laurent system handle.
pub struct PhgSystem {
    inner: LaurentSystem,
}

/// Opaque precomputed-tables handle (homogenized system plus the constant
/// evaluation tables).
pub struct PhgTables {
    hom: HomogenizedSystem,
    tables: HomotopyTables,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: PhgStatus, msg: &str) -> PhgStatus {
    set_error(msg);
    status
}

fn system_status(e: &SystemError) -> PhgStatus {
    match e {
        SystemError::Parse { .. } => PhgStatus::ParseError,
        SystemError::DuplicateMonomial { .. } => PhgStatus::DuplicateMonomial,
        SystemError::Shape(_) | SystemError::ZeroEquation { .. } => PhgStatus::ShapeError,
        SystemError::EmptySupport => PhgStatus::EmptySupport,
        SystemError::InvalidLifting { .. } => PhgStatus::InvalidLifting,
    }
}

fn eval_status(e: &EvalError) -> PhgStatus {
    match e {
        EvalError::ZeroCoordinate { .. } => PhgStatus::ZeroCoordinate,
        EvalError::MonomialOverflow { .. } => PhgStatus::MonomialOverflow,
        EvalError::Shape(_) => PhgStatus::ShapeError,
        EvalError::InSubBatch { source, .. } => eval_status(source),
        _ => PhgStatus::NumericalError,
    }
}

fn direction_status(e: &DirectionError) -> PhgStatus {
    match e {
        DirectionError::SingularJacobian => PhgStatus::SingularJacobian,
        DirectionError::DegenerateTangent { .. } => PhgStatus::DegenerateTangent,
        _ => PhgStatus::NumericalError,
    }
}

/// # Safety
/// `backend` may be null (reference backend) or a NUL-terminated string.
unsafe fn backend_from(backend: *const c_char) -> Result<BackendKind, PhgStatus> {
    if backend.is_null() {
        return Ok(BackendKind::Reference);
    }
    let s = CStr::from_ptr(backend)
        .to_str()
        .map_err(|_| PhgStatus::Utf8Error)?;
    s.parse::<BackendKind>().map_err(|_| PhgStatus::UnknownBackend)
}

unsafe fn read_points(
    y: *const f64,
    tau: *const f64,
    p: usize,
    nvars: usize,
) -> Result<PointBatch, EvalError> {
    let ys = std::slice::from_raw_parts(y, 2 * p * nvars);
    let taus = std::slice::from_raw_parts(tau, p).to_vec();
    let m = ComplexMatrix::from_fn(p, nvars, |i, j| {
        Complex64::new(ys[2 * (i * nvars + j)], ys[2 * (i * nvars + j) + 1])
    });
    PointBatch::new(m, taus)
}

unsafe fn write_complex(dst: *mut f64, offset: usize, z: Complex64) {
    *dst.add(2 * offset) = z.re;
    *dst.add(2 * offset + 1) = z.im;
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn phg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn phg_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from a `phg_*` call that documents `phg_string_free`, or be
/// null.
#[no_mangle]
pub unsafe extern "C" fn phg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a system from its JSON document.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn phg_system_parse(
    text: *const c_char,
    out: *mut *mut PhgSystem,
) -> PhgStatus {
    if text.is_null() || out.is_null() {
        return fail(PhgStatus::NullArgument, "null argument");
    }
    let text = match CStr::from_ptr(text).to_str() {
        Ok(t) => t,
        Err(_) => return fail(PhgStatus::Utf8Error, "system text is not valid UTF-8"),
    };
    match LaurentSystem::parse(text) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(PhgSystem { inner }));
            PhgStatus::Ok
        }
        Err(e) => fail(system_status(&e), &e.to_string()),
    }
}

/// Serializes a system to JSON. Free the result with `phg_string_free`.
///
/// # Safety
/// `sys` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn phg_system_to_json(
    sys: *const PhgSystem,
    out: *mut *mut c_char,
) -> PhgStatus {
    if sys.is_null() || out.is_null() {
        return fail(PhgStatus::NullArgument, "null argument");
    }
    let json = (*sys).inner.to_json();
    match CString::new(json) {
        Ok(c) => {
            *out = c.into_raw();
            PhgStatus::Ok
        }
        Err(_) => fail(PhgStatus::NumericalError, "serialized text contained NUL"),
    }
}

/// Generates the cyclic-n benchmark system with seeded lifting.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn phg_system_cyclic(
    n: usize,
    seed: u64,
    out: *mut *mut PhgSystem,
) -> PhgStatus {
    if out.is_null() {
        return fail(PhgStatus::NullArgument, "null argument");
    }
    if n < 3 {
        return fail(PhgStatus::InvalidArgument, "cyclic systems need n >= 3");
    }
    let inner = gen_cyclic(n, &mut LiftingSource::seeded(seed));
    *out = Box::into_raw(Box::new(PhgSystem { inner }));
    PhgStatus::Ok
}

/// Generates the discretized Chandrasekhar system with seeded lifting.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn phg_system_chandra(
    n: usize,
    c: f64,
    seed: u64,
    out: *mut *mut PhgSystem,
) -> PhgStatus {
    if out.is_null() {
        return fail(PhgStatus::NullArgument, "null argument");
    }
    if n < 2 || !(c > 0.0 && c <= 1.0) {
        return fail(
            PhgStatus::InvalidArgument,
            "chandra systems need n >= 2 and c in (0, 1]",
        );
    }
    let inner = gen_chandra(n, c, &mut LiftingSource::seeded(seed));
    *out = Box::into_raw(Box::new(PhgSystem { inner }));
    PhgStatus::Ok
}

/// Generates a seeded random system with up to `m` monomials and exponents
/// in `[exp_min, exp_max]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn phg_system_random(
    n: usize,
    m: usize,
    exp_min: i64,
    exp_max: i64,
    seed: u64,
    out: *mut *mut PhgSystem,
) -> PhgStatus {
    if out.is_null() {
        return fail(PhgStatus::NullArgument, "null argument");
    }
    if n < 1 || m < 1 || exp_min > exp_max {
        return fail(
            PhgStatus::InvalidArgument,
            "random systems need n >= 1, m >= 1, exp_min <= exp_max",
        );
    }
    let mut cfg = RandomSystemConfig::new(n, m, seed);
    cfg.exp_min = exp_min;
    cfg.exp_max = exp_max;
    let inner = gen_random(&cfg, &mut LiftingSource::seeded(seed));
    *out = Box::into_raw(Box::new(PhgSystem { inner }));
    PhgStatus::Ok
}

/// # Safety
/// `sys` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn phg_system_free(sys: *mut PhgSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Equation count n; zero for a null handle.
///
/// # Safety
/// `sys` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn phg_system_equation_count(sys: *const PhgSystem) -> usize {
    if sys.is_null() {
        0
    } else {
        (*sys).inner.equation_count()
    }
}

/// Number of distinct monomials m; zero for a null handle.
///
/// # Safety
/// `sys` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn phg_system_monomial_count(sys: *const PhgSystem) -> usize {
    if sys.is_null() {
        0
    } else {
        (*sys).inner.monomial_count()
    }
}

/// Homogenizes the system and precomputes the evaluation tables.
///
/// # Safety
/// `sys` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn phg_tables_new(
    sys: *const PhgSystem,
    out: *mut *mut PhgTables,
) -> PhgStatus {
    if sys.is_null() || out.is_null() {
        return fail(PhgStatus::NullArgument, "null argument");
    }
    let hom = homogenize(&(*sys).inner);
    let tables = build_tables(&hom);
    *out = Box::into_raw(Box::new(PhgTables { hom, tables }));
    PhgStatus::Ok
}

/// # Safety
/// `tables` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn phg_tables_free(tables: *mut PhgTables) {
    if !tables.is_null() {
        drop(Box::from_raw(tables));
    }
}

/// Homogeneous coordinate count N = n + 1; zero for a null handle.
///
/// # Safety
/// `tables` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn phg_tables_variable_count(tables: *const PhgTables) -> usize {
    if tables.is_null() {
        0
    } else {
        (*tables).tables.variable_count()
    }
}

/// Shared homogeneous degree.
///
/// # Safety
/// `tables` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn phg_tables_degree(tables: *const PhgTables) -> i64 {
    if tables.is_null() {
        0
    } else {
        (*tables).tables.degree()
    }
}

/// Evaluates the homogeneous extended Jacobian blocks of `p` points.
///
/// `y`: `p x N` complex matrix (2*p*N doubles). `tau`: `p` doubles.
/// `out_blocks`: `p x n x (N+2)` complex entries (2*p*n*(N+2) doubles).
/// `batch_size` 0 selects the default (a quarter of the batch).
///
/// # Safety
/// Buffers must be valid for the documented lengths; `tables` must be a
/// live handle; `backend` may be null.
#[no_mangle]
pub unsafe extern "C" fn phg_eval(
    tables: *const PhgTables,
    y: *const f64,
    tau: *const f64,
    p: usize,
    batch_size: usize,
    backend: *const c_char,
    out_blocks: *mut f64,
) -> PhgStatus {
    if tables.is_null() || y.is_null() || tau.is_null() || out_blocks.is_null() {
        return fail(PhgStatus::NullArgument, "null argument");
    }
    let backend = match backend_from(backend) {
        Ok(b) => b,
        Err(s) => return fail(s, "invalid backend name"),
    };
    let t = &(*tables).tables;
    let batch = match read_points(y, tau, p, t.variable_count()) {
        Ok(b) => b,
        Err(e) => return fail(eval_status(&e), &e.to_string()),
    };
    let b = if batch_size == 0 {
        default_batch_size(p)
    } else {
        batch_size
    };
    match evaluate_batch(&batch, t, b, backend.instance()) {
        Ok(jac) => {
            let width = t.equation_count() * t.block_cols();
            for point in 0..p {
                for col in 0..width {
                    write_complex(out_blocks, point * width + col, jac.data()[(point, col)]);
                }
            }
            PhgStatus::Ok
        }
        Err(e) => fail(eval_status(&e), &e.to_string()),
    }
}

/// Evaluates one point with the scalar oracle (no matrix products), for
/// validation against [`phg_eval`]. `out_block`: `n x (N+2)` complex entries.
///
/// # Safety
/// Buffers must be valid for the documented lengths; `tables` must be a
/// live handle.
#[no_mangle]
pub unsafe extern "C" fn phg_eval_oracle(
    tables: *const PhgTables,
    y: *const f64,
    tau: f64,
    out_block: *mut f64,
) -> PhgStatus {
    if tables.is_null() || y.is_null() || out_block.is_null() {
        return fail(PhgStatus::NullArgument, "null argument");
    }
    let t = &(*tables).tables;
    let nvars = t.variable_count();
    let ys = std::slice::from_raw_parts(y, 2 * nvars);
    let point: Vec<Complex64> = (0..nvars)
        .map(|j| Complex64::new(ys[2 * j], ys[2 * j + 1]))
        .collect();
    match eval_scalar_oracle(&point, tau, &(*tables).hom) {
        Ok(block) => {
            let width = t.equation_count() * t.block_cols();
            for (idx, z) in block.data().iter().enumerate().take(width) {
                write_complex(out_block, idx, *z);
            }
            PhgStatus::Ok
        }
        Err(e) => fail(eval_status(&e), &e.to_string()),
    }
}

/// Computes Euler and Newton directions for `p` points. Outputs are `p x N`
/// complex matrices; `out_cond` receives the per-point conditioning signal
/// and `out_status` a per-point status (`PHG_OK` on success). Returns the
/// first per-point failure status, or `PHG_OK` when every point succeeded.
///
/// # Safety
/// Buffers must be valid for the documented lengths; `tables` must be a
/// live handle; `backend` may be null.
#[no_mangle]
pub unsafe extern "C" fn phg_directions(
    tables: *const PhgTables,
    y: *const f64,
    tau: *const f64,
    p: usize,
    backend: *const c_char,
    out_euler: *mut f64,
    out_newton: *mut f64,
    out_cond: *mut f64,
    out_status: *mut PhgStatus,
) -> PhgStatus {
    if tables.is_null()
        || y.is_null()
        || tau.is_null()
        || out_euler.is_null()
        || out_newton.is_null()
        || out_cond.is_null()
        || out_status.is_null()
    {
        return fail(PhgStatus::NullArgument, "null argument");
    }
    let backend = match backend_from(backend) {
        Ok(b) => b,
        Err(s) => return fail(s, "invalid backend name"),
    };
    let t = &(*tables).tables;
    let nvars = t.variable_count();
    let batch = match read_points(y, tau, p, nvars) {
        Ok(b) => b,
        Err(e) => return fail(eval_status(&e), &e.to_string()),
    };
    let jac = match evaluate_batch(&batch, t, default_batch_size(p), backend.instance()) {
        Ok(j) => j,
        Err(e) => return fail(eval_status(&e), &e.to_string()),
    };
    let mut bordered = Vec::with_capacity(p);
    for i in 0..p {
        match assemble_bordered(&jac.block(i), batch.point(i)) {
            Ok(b) => bordered.push(b),
            Err(e) => return fail(direction_status(&e), &e.to_string()),
        }
    }
    let mut first_failure = PhgStatus::Ok;
    for (i, pair) in euler_newton_unified(&bordered, backend.instance())
        .into_iter()
        .enumerate()
    {
        match pair {
            Ok(pair) => {
                for j in 0..nvars {
                    write_complex(out_euler, i * nvars + j, pair.euler[j]);
                    write_complex(out_newton, i * nvars + j, pair.newton[j]);
                }
                *out_cond.add(i) = pair.cond_signal;
                *out_status.add(i) = PhgStatus::Ok;
            }
            Err(e) => {
                for j in 0..nvars {
                    write_complex(out_euler, i * nvars + j, Complex64::ZERO);
                    write_complex(out_newton, i * nvars + j, Complex64::ZERO);
                }
                *out_cond.add(i) = 0.0;
                let status = direction_status(&e);
                *out_status.add(i) = status;
                if first_failure == PhgStatus::Ok {
                    set_error(&e.to_string());
                    first_failure = status;
                }
            }
        }
    }
    first_failure
}

/// Fills default tracking options.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn phg_track_options_default(out: *mut PhgTrackOptions) {
    if out.is_null() {
        return;
    }
    let d = TrackOptions::default();
    *out = PhgTrackOptions {
        tau0: d.tau0,
        step_init: d.step_init,
        step_min: d.step_min,
        step_max: d.step_max,
        newton_tol: d.newton_tol,
        newton_max_iters: d.newton_max_iters,
        shrink: d.shrink,
        grow: d.grow,
        grow_after: d.grow_after,
        max_steps: d.max_steps,
        fixed_step_mode: d.fixed_step_mode,
        fixed_steps: d.fixed_steps,
        accept_tol: d.accept_tol,
        start_tol: d.start_tol,
        skip_start_check: d.skip_start_check,
    };
}

/// Tracks `p` paths from `tau0` to zero. `y0`: `p x N` complex start points.
/// `out_results`: `p` records. `out_y`: `p x N` complex final points.
/// `opts` may be null for defaults; `batch_size` 0 selects the default.
///
/// # Safety
/// Buffers must be valid for the documented lengths; `tables` must be a
/// live handle; `backend` may be null.
#[no_mangle]
pub unsafe extern "C" fn phg_track(
    tables: *const PhgTables,
    y0: *const f64,
    tau0: f64,
    p: usize,
    opts: *const PhgTrackOptions,
    backend: *const c_char,
    batch_size: usize,
    out_results: *mut PhgPathResult,
    out_y: *mut f64,
) -> PhgStatus {
    if tables.is_null() || y0.is_null() || out_results.is_null() || out_y.is_null() {
        return fail(PhgStatus::NullArgument, "null argument");
    }
    let backend = match backend_from(backend) {
        Ok(b) => b,
        Err(s) => return fail(s, "invalid backend name"),
    };
    if !(tau0 < 0.0) || !tau0.is_finite() {
        return fail(PhgStatus::InvalidArgument, "tau0 must be finite and negative");
    }
    let t = &(*tables).tables;
    let nvars = t.variable_count();
    let taus = vec![tau0; p];
    let ys = std::slice::from_raw_parts(y0, 2 * p * nvars);
    let m = ComplexMatrix::from_fn(p, nvars, |i, j| {
        Complex64::new(ys[2 * (i * nvars + j)], ys[2 * (i * nvars + j) + 1])
    });
    let batch = match PointBatch::new(m, taus) {
        Ok(b) => b,
        Err(e) => return fail(eval_status(&e), &e.to_string()),
    };
    let mut track_opts: TrackOptions = if opts.is_null() {
        TrackOptions::default()
    } else {
        (*opts).into()
    };
    track_opts.tau0 = tau0;
    let eval = EvalOptions {
        backend,
        batch_size: if batch_size == 0 { None } else { Some(batch_size) },
    };
    match track_batch(&batch, t, &track_opts, &eval) {
        Ok(results) => {
            for (i, r) in results.iter().enumerate() {
                *out_results.add(i) = PhgPathResult {
                    status: r.status.into(),
                    tau: r.tau,
                    residual: r.residual,
                    steps: r.steps_taken,
                    newton_iters: r.newton_iters_total,
                    at_infinity: r.at_infinity(),
                };
                for j in 0..nvars {
                    write_complex(out_y, i * nvars + j, r.y[j]);
                }
            }
            PhgStatus::Ok
        }
        Err(e) => fail(PhgStatus::InvalidArgument, &e.to_string()),
    }
}

// Keep the pointer-based API honest about never unwinding across the FFI
// boundary in the success paths exercised by tests.
#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn version_is_nul_terminated() {
        let v = phg_version();
        let s = unsafe { CStr::from_ptr(v) };
        assert!(!s.to_str().unwrap().is_empty());
    }

    #[test]
    fn null_arguments_are_rejected() {
        let status = unsafe { phg_system_parse(ptr::null(), ptr::null_mut()) };
        assert_eq!(status, PhgStatus::NullArgument);
    }
}
