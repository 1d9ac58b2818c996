//! Batched predictor-corrector path tracking in the logarithmic parameter,
//! from a large negative start value toward zero: Euler prediction, Newton
//! correction, projective renormalization, and per-path step control.

use num_complex::Complex64;
use thiserror::Error;

use crate::directions::{assemble_bordered, euler_newton_unified, DirectionError, DirectionPair};
use crate::eval::{default_batch_size, evaluate_batch_lenient, EvalError, PointBatch};
use crate::kernels::{BackendKind, ComplexMatrix};
use crate::system::HomotopyTables;

/// Paths whose homogenizing coordinate falls below this fraction of the
/// point norm are reported as at infinity instead of dehomogenized.
pub const DEHOMOGENIZE_THRESHOLD: f64 = 1e-10;

/// Backend and sub-batch configuration threaded through the evaluator.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub backend: BackendKind,
    /// Evaluation sub-batch size; `None` means a quarter of the batch.
    pub batch_size: Option<usize>,
}

impl EvalOptions {
    pub fn with_backend(backend: BackendKind) -> Self {
        Self {
            backend,
            batch_size: None,
        }
    }

    pub fn resolve_batch_size(&self, p: usize) -> usize {
        self.batch_size.unwrap_or_else(|| default_batch_size(p)).max(1)
    }
}

#[derive(Debug, Clone)]
pub struct TrackOptions {
    /// Start parameter; must be negative.
    pub tau0: f64,
    pub step_init: f64,
    pub step_min: f64,
    pub step_max: f64,
    /// Corrector acceptance: ||Nv|| / ||y||.
    pub newton_tol: f64,
    pub newton_max_iters: u32,
    pub shrink: f64,
    pub grow: f64,
    /// Consecutive accepted steps before the step size grows.
    pub grow_after: u32,
    /// Bound on step attempts per path.
    pub max_steps: u64,
    /// Uniform steps, unconditional acceptance, fixed corrector count.
    pub fixed_step_mode: bool,
    /// Number of uniform steps in fixed-step mode.
    pub fixed_steps: u64,
    /// Residual bound for a Converged verdict.
    pub accept_tol: f64,
    /// Residual bound start points must satisfy.
    pub start_tol: f64,
    pub skip_start_check: bool,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            tau0: -20.0,
            step_init: 0.05,
            step_min: 1e-8,
            step_max: 0.5,
            newton_tol: 1e-10,
            newton_max_iters: 4,
            shrink: 0.5,
            grow: 2.0,
            grow_after: 3,
            max_steps: 10_000,
            fixed_step_mode: false,
            fixed_steps: 100,
            accept_tol: 1e-8,
            start_tol: 1e-6,
            skip_start_check: false,
        }
    }
}

impl TrackOptions {
    pub fn validate(&self) -> Result<(), TrackError> {
        if !(self.tau0 < 0.0) || !self.tau0.is_finite() {
            return Err(TrackError::InvalidOptions(format!(
                "tau0 must be a finite negative value, got {}",
                self.tau0
            )));
        }
        if !(self.step_min <= self.step_init && self.step_init <= self.step_max) {
            return Err(TrackError::InvalidOptions(format!(
                "step sizes must satisfy step_min <= step_init <= step_max, got {} / {} / {}",
                self.step_min, self.step_init, self.step_max
            )));
        }
        if self.step_min <= 0.0 {
            return Err(TrackError::InvalidOptions("step_min must be positive".into()));
        }
        if self.fixed_step_mode && self.fixed_steps == 0 {
            return Err(TrackError::InvalidOptions(
                "fixed-step mode needs at least one step".into(),
            ));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) || self.grow < 1.0 {
            return Err(TrackError::InvalidOptions(
                "shrink must lie in (0,1) and grow must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error)]
pub enum TrackError {
    #[error("invalid tracking options: {0}")]
    InvalidOptions(String),
    #[error("start point {index} violates the residual tolerance: {residual:.3e} > {tol:.3e}")]
    StartPointInvalid {
        index: usize,
        residual: f64,
        tol: f64,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStatus {
    Converged,
    SingularEncountered,
    StepUnderflow,
    MaxSteps,
    Overflowed,
}

impl PathStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PathStatus::Converged => "Converged",
            PathStatus::SingularEncountered => "SingularEncountered",
            PathStatus::StepUnderflow => "StepUnderflow",
            PathStatus::MaxSteps => "MaxSteps",
            PathStatus::Overflowed => "Overflowed",
        }
    }
}

/// Per-path reason a step could not be completed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathFailure {
    /// A coordinate hit exact zero; the point left the log-coordinate domain.
    ZeroCoordinate,
    /// Evaluation overflowed even after renormalization.
    Overflow,
    /// Rank-deficient Jacobian.
    Singular,
    /// Degenerate tangent frame.
    Degenerate,
}

impl PathFailure {
    fn status(self) -> PathStatus {
        match self {
            PathFailure::ZeroCoordinate | PathFailure::Singular | PathFailure::Degenerate => {
                PathStatus::SingularEncountered
            }
            PathFailure::Overflow => PathStatus::Overflowed,
        }
    }

    fn from_eval(e: &EvalError) -> Self {
        match e {
            EvalError::ZeroCoordinate { .. } => PathFailure::ZeroCoordinate,
            _ => PathFailure::Overflow,
        }
    }

    fn from_direction(e: &DirectionError) -> Self {
        match e {
            DirectionError::DegenerateTangent { .. } => PathFailure::Degenerate,
            _ => PathFailure::Singular,
        }
    }
}

/// Outcome of one Euler-Newton step for one point.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub newton_iters: u32,
    /// Final ||Nv|| / ||y||; zero when no corrector iteration ran.
    pub newton_ratio: f64,
    pub failure: Option<PathFailure>,
}

impl Default for StepReport {
    fn default() -> Self {
        Self {
            newton_iters: 0,
            newton_ratio: 0.0,
            failure: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrackResult {
    pub status: PathStatus,
    /// Final homogeneous point, unit norm.
    pub y: Vec<Complex64>,
    pub tau: f64,
    /// Dehomogenized coordinates, absent when the homogenizing coordinate
    /// is below [`DEHOMOGENIZE_THRESHOLD`].
    pub x_affine: Option<Vec<Complex64>>,
    /// ||H(y, tau_final)||.
    pub residual: f64,
    /// Accepted steps.
    pub steps_taken: u64,
    pub newton_iters_total: u64,
    /// Start data kept so a result can be retraced.
    pub start_y: Vec<Complex64>,
    pub start_tau: f64,
}

impl TrackResult {
    pub fn at_infinity(&self) -> bool {
        self.x_affine.is_none()
    }
}

/// Evaluates the homogeneous extended Jacobian blocks for the given rows,
/// renormalizing and retrying once on overflow (a projective representative
/// change), then computes both directions per point.
fn directions_for(
    batch: &mut PointBatch,
    indices: &[usize],
    tables: &HomotopyTables,
    eval: &EvalOptions,
) -> Vec<Result<DirectionPair, PathFailure>> {
    let backend = eval.backend.instance();
    let bsize = eval.resolve_batch_size(indices.len());
    let sub = batch.select(indices);
    let (jac, fails) =
        evaluate_batch_lenient(&sub, tables, bsize, backend).expect("validated dimensions");

    let mut blocks: Vec<Result<ComplexMatrix, PathFailure>> = indices
        .iter()
        .enumerate()
        .map(|(li, _)| match &fails[li] {
            None => Ok(jac.block(li)),
            Some(e) => Err(PathFailure::from_eval(e)),
        })
        .collect();

    // Overflow response: renormalize the offending points and retry once.
    let retry: Vec<(usize, usize)> = blocks
        .iter()
        .enumerate()
        .filter_map(|(pos, b)| match b {
            Err(PathFailure::Overflow) => Some((pos, indices[pos])),
            _ => None,
        })
        .collect();
    if !retry.is_empty() {
        for &(_, gi) in &retry {
            batch.normalize_point(gi);
        }
        let globals: Vec<usize> = retry.iter().map(|&(_, gi)| gi).collect();
        let sub2 = batch.select(&globals);
        let (jac2, fails2) = evaluate_batch_lenient(&sub2, tables, eval.resolve_batch_size(globals.len()), backend)
            .expect("validated dimensions");
        for (j, &(pos, _)) in retry.iter().enumerate() {
            blocks[pos] = match &fails2[j] {
                None => Ok(jac2.block(j)),
                Some(e) => Err(PathFailure::from_eval(e)),
            };
        }
    }

    let mut bordered = Vec::new();
    let mut slots = Vec::new();
    let mut out: Vec<Result<DirectionPair, PathFailure>> = Vec::with_capacity(blocks.len());
    for (pos, block) in blocks.into_iter().enumerate() {
        match block {
            Ok(b) => match assemble_bordered(&b, batch.point(indices[pos])) {
                Ok(j) => {
                    bordered.push(j);
                    slots.push(pos);
                    out.push(Err(PathFailure::Singular)); // placeholder, overwritten below
                }
                Err(e) => out.push(Err(PathFailure::from_direction(&e))),
            },
            Err(f) => out.push(Err(f)),
        }
    }
    for (slot, pair) in slots.into_iter().zip(euler_newton_unified(&bordered, backend)) {
        out[slot] = pair.map_err(|e| PathFailure::from_direction(&e));
    }
    out
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// One batched Euler-Newton step with per-point parameter increments:
/// evaluate, predict `y += dtau * E`, advance the parameter, then correct
/// `y += Nv` up to `newton_max_iters` times (early exit at `newton_tol`
/// unless in fixed-step mode), and renormalize. Increments are signed so the
/// same step drives forward tracking and retracing; forward use keeps
/// `tau + dtau <= 0`.
pub fn euler_newton_step(
    batch: &mut PointBatch,
    tables: &HomotopyTables,
    dtau: &[f64],
    opts: &TrackOptions,
    eval: &EvalOptions,
) -> Vec<StepReport> {
    let p = batch.len();
    assert_eq!(dtau.len(), p, "one parameter increment per point");
    let mut reports = vec![StepReport::default(); p];
    if p == 0 {
        return reports;
    }

    // Prediction.
    let all: Vec<usize> = (0..p).collect();
    let mut active: Vec<usize> = Vec::with_capacity(p);
    for (gi, dir) in all.iter().zip(directions_for(batch, &all, tables, eval)) {
        match dir {
            Ok(pair) => {
                batch.add_scaled(*gi, &pair.euler, dtau[*gi]);
                batch.set_tau(*gi, (batch.tau(*gi) + dtau[*gi]).min(0.0));
                active.push(*gi);
            }
            Err(f) => reports[*gi].failure = Some(f),
        }
    }

    // Correction at the advanced parameter value.
    for iter in 1..=opts.newton_max_iters {
        if active.is_empty() {
            break;
        }
        let dirs = directions_for(batch, &active, tables, eval);
        let mut next = Vec::with_capacity(active.len());
        for (gi, dir) in active.iter().zip(dirs) {
            match dir {
                Ok(pair) => {
                    batch.add_scaled(*gi, &pair.newton, 1.0);
                    let ratio = vec_norm(&pair.newton) / batch.point_norm(*gi).max(f64::MIN_POSITIVE);
                    reports[*gi].newton_iters = iter;
                    reports[*gi].newton_ratio = ratio;
                    if opts.fixed_step_mode || ratio > opts.newton_tol {
                        next.push(*gi);
                    }
                }
                Err(f) => reports[*gi].failure = Some(f),
            }
        }
        active = next;
    }

    for gi in 0..p {
        if reports[gi].failure.is_none() {
            batch.normalize_point(gi);
        }
    }
    reports
}

struct PathState {
    y: Vec<Complex64>,
    tau: f64,
    dir: f64,
    dtau: f64,
    consec: u32,
    steps: u64,
    attempts: u64,
    newton_total: u64,
    status: Option<PathStatus>,
    residual: f64,
    start_y: Vec<Complex64>,
    start_tau: f64,
}

/// Residual norms ||H(y_i, tau_i)|| of a batch.
pub fn start_residuals(
    batch: &PointBatch,
    tables: &HomotopyTables,
    eval: &EvalOptions,
) -> Result<Vec<f64>, EvalError> {
    let backend = eval.backend.instance();
    let (jac, fails) =
        evaluate_batch_lenient(batch, tables, eval.resolve_batch_size(batch.len()), backend)?;
    Ok((0..batch.len())
        .map(|i| {
            if fails[i].is_some() {
                f64::INFINITY
            } else {
                jac.value_norm(i)
            }
        })
        .collect())
}

/// Start-point gate: every residual must be within `start_tol` unless the
/// options skip the check. Reports the worst offender.
pub fn check_start_points(
    batch: &PointBatch,
    tables: &HomotopyTables,
    opts: &TrackOptions,
    eval: &EvalOptions,
) -> Result<(), TrackError> {
    if opts.skip_start_check || opts.fixed_step_mode {
        return Ok(());
    }
    let residuals = start_residuals(batch, tables, eval)?;
    let worst = residuals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite or infinite residuals"));
    if let Some((index, &residual)) = worst {
        if residual > opts.start_tol {
            return Err(TrackError::StartPointInvalid {
                index,
                residual,
                tol: opts.start_tol,
            });
        }
    }
    Ok(())
}

/// Tracks every path of `start` to `tau = 0` in lockstep batches with
/// per-path step control. Failures never abort the batch; they only mark
/// the affected path.
pub fn track_batch(
    start: &PointBatch,
    tables: &HomotopyTables,
    opts: &TrackOptions,
    eval: &EvalOptions,
) -> Result<Vec<TrackResult>, TrackError> {
    track_span(start, tables, 0.0, opts, eval)
}

fn track_span(
    start: &PointBatch,
    tables: &HomotopyTables,
    target: f64,
    opts: &TrackOptions,
    eval: &EvalOptions,
) -> Result<Vec<TrackResult>, TrackError> {
    opts.validate()?;
    if start.vars() != tables.variable_count() {
        return Err(TrackError::Eval(EvalError::Shape(format!(
            "points have {} coordinates, tables expect {}",
            start.vars(),
            tables.variable_count()
        ))));
    }
    let p = start.len();
    let mut states: Vec<PathState> = (0..p)
        .map(|i| {
            let mut y = start.point(i).to_vec();
            let norm = vec_norm(&y);
            if norm > 0.0 && norm.is_finite() {
                for v in &mut y {
                    *v /= norm;
                }
            }
            let tau = start.tau(i);
            let remaining = (target - tau).abs();
            let dir = if target >= tau { 1.0 } else { -1.0 };
            let dtau = if opts.fixed_step_mode {
                remaining / opts.fixed_steps as f64
            } else {
                opts.step_init
            };
            PathState {
                start_y: y.clone(),
                y,
                tau,
                dir,
                dtau,
                consec: 0,
                steps: 0,
                attempts: 0,
                newton_total: 0,
                status: None,
                residual: f64::INFINITY,
                start_tau: tau,
            }
        })
        .collect();

    loop {
        let active: Vec<usize> = states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.status.is_none())
            .map(|(i, _)| i)
            .collect();
        if active.is_empty() {
            break;
        }

        // Assemble the active sub-batch and clamp each final step onto the
        // target so no accepted step overshoots. Fixed-step mode walks an
        // exact parameter grid indexed by the accepted-step count, which
        // keeps the step budget immune to rounding drift.
        let mut signed = Vec::with_capacity(active.len());
        let mut finals = Vec::with_capacity(active.len());
        let mut planned = Vec::with_capacity(active.len());
        let rows: Vec<Vec<Complex64>> = active.iter().map(|&gi| states[gi].y.clone()).collect();
        let taus: Vec<f64> = active.iter().map(|&gi| states[gi].tau).collect();
        for &gi in &active {
            let st = &states[gi];
            if opts.fixed_step_mode {
                let next = st.steps + 1;
                let is_final = next >= opts.fixed_steps;
                let next_tau = if is_final {
                    target
                } else {
                    st.start_tau
                        + (target - st.start_tau) * (next as f64 / opts.fixed_steps as f64)
                };
                signed.push(next_tau - st.tau);
                finals.push(is_final);
                planned.push(next_tau);
            } else {
                let remaining = (target - st.tau) * st.dir;
                let is_final = st.dtau >= remaining;
                let step = if is_final { remaining } else { st.dtau };
                signed.push(st.dir * step);
                finals.push(is_final);
                planned.push(st.tau + st.dir * step);
            }
        }
        let mut sub = PointBatch::new(ComplexMatrix::from_rows(&rows), taus)
            .expect("tracked parameters stay in domain");
        let reports = euler_newton_step(&mut sub, tables, &signed, opts, eval);

        for (li, &gi) in active.iter().enumerate() {
            let report = reports[li];
            let st = &mut states[gi];
            st.attempts += 1;
            st.newton_total += report.newton_iters as u64;

            if let Some(failure) = report.failure {
                st.status = Some(failure.status());
                continue;
            }

            let success = opts.fixed_step_mode
                || opts.newton_max_iters == 0
                || report.newton_ratio <= opts.newton_tol;
            if success {
                st.y = sub.point(li).to_vec();
                st.tau = if finals[li] { target } else { planned[li] };
                st.steps += 1;
                st.consec += 1;
                if finals[li] {
                    finalize_path(st, tables, target, opts, eval);
                } else if !opts.fixed_step_mode && st.consec >= opts.grow_after {
                    st.dtau = (st.dtau * opts.grow).min(opts.step_max);
                    st.consec = 0;
                }
            } else {
                // Rewind: the snapshot in `states` was never overwritten.
                st.dtau *= opts.shrink;
                st.consec = 0;
                if st.dtau < opts.step_min {
                    st.status = Some(PathStatus::StepUnderflow);
                }
            }
            if st.status.is_none() && st.attempts >= opts.max_steps {
                st.status = Some(PathStatus::MaxSteps);
            }
        }
    }

    Ok(states
        .into_iter()
        .map(|st| {
            let x_affine = dehomogenize(&st.y);
            TrackResult {
                status: st.status.unwrap_or(PathStatus::MaxSteps),
                y: st.y,
                tau: st.tau,
                x_affine,
                residual: st.residual,
                steps_taken: st.steps,
                newton_iters_total: st.newton_total,
                start_y: st.start_y,
                start_tau: st.start_tau,
            }
        })
        .collect())
}

/// Residual measurement and, in adaptive mode, a short corrector-only
/// polishing loop once a path reaches the target parameter.
fn finalize_path(
    st: &mut PathState,
    tables: &HomotopyTables,
    target: f64,
    opts: &TrackOptions,
    eval: &EvalOptions,
) {
    let polish_rounds = if opts.fixed_step_mode { 0 } else { 3 };
    for round in 0..=polish_rounds {
        match residual_at(&st.y, target, tables, eval) {
            Ok(residual) => {
                st.residual = residual;
                if residual <= opts.accept_tol {
                    st.status = Some(PathStatus::Converged);
                    return;
                }
            }
            Err(f) => {
                st.residual = f64::INFINITY;
                st.status = Some(f.status());
                return;
            }
        }
        if round < polish_rounds && opts.newton_max_iters > 0 {
            let mut one = PointBatch::new(ComplexMatrix::from_rows(&[st.y.clone()]), vec![target.min(0.0)])
                .expect("target stays in domain");
            let report = euler_newton_step(&mut one, tables, &[0.0], opts, eval)
                .pop()
                .expect("one report");
            st.newton_total += report.newton_iters as u64;
            if let Some(f) = report.failure {
                st.status = Some(f.status());
                return;
            }
            st.y = one.point(0).to_vec();
        }
    }
    st.status = Some(PathStatus::MaxSteps);
}

fn residual_at(
    y: &[Complex64],
    tau: f64,
    tables: &HomotopyTables,
    eval: &EvalOptions,
) -> Result<f64, PathFailure> {
    let batch = PointBatch::new(ComplexMatrix::from_rows(&[y.to_vec()]), vec![tau.min(0.0)])
        .expect("tau in domain");
    let (jac, fails) = evaluate_batch_lenient(&batch, tables, 1, eval.backend.instance())
        .expect("validated dimensions");
    match &fails[0] {
        None => Ok(jac.value_norm(0)),
        Some(e) => Err(PathFailure::from_eval(e)),
    }
}

fn dehomogenize(y: &[Complex64]) -> Option<Vec<Complex64>> {
    let norm = vec_norm(y);
    let last = y[y.len() - 1];
    if last.norm() >= DEHOMOGENIZE_THRESHOLD * norm.max(f64::MIN_POSITIVE) {
        Some(y[..y.len() - 1].iter().map(|v| v / last).collect())
    } else {
        None
    }
}

/// Chordal distance between two points of projective space:
/// `sqrt(1 - |<u,v>|^2 / (|u|^2 |v|^2))`, the sine of the principal angle.
pub fn chordal_distance(u: &[Complex64], v: &[Complex64]) -> f64 {
    let nu = vec_norm(u);
    let nv = vec_norm(v);
    if nu == 0.0 || nv == 0.0 {
        return f64::INFINITY;
    }
    let dot: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
    let cos2 = (dot.norm() / (nu * nv)).min(1.0);
    (1.0 - cos2 * cos2).max(0.0).sqrt()
}

/// Self-consistency oracle: tracks a converged result backward to its start
/// parameter and returns the chordal distance to the original start point.
/// Tracking failures come back as infinity.
pub fn retrace_check(
    result: &TrackResult,
    tables: &HomotopyTables,
    opts: &TrackOptions,
    eval: &EvalOptions,
) -> f64 {
    if result.status != PathStatus::Converged {
        return f64::INFINITY;
    }
    if opts.validate().is_err() {
        return f64::INFINITY;
    }
    let batch = match PointBatch::new(
        ComplexMatrix::from_rows(&[result.y.clone()]),
        vec![result.tau.min(0.0)],
    ) {
        Ok(b) => b,
        Err(_) => return f64::INFINITY,
    };
    let back = match track_span(&batch, tables, result.start_tau, opts, eval) {
        Ok(mut r) => r.pop().expect("one path"),
        Err(_) => return f64::INFINITY,
    };
    if back.status != PathStatus::Converged {
        return f64::INFINITY;
    }
    chordal_distance(&back.y, &result.start_y)
}
