//! Batched evaluation of the homotopy and its full derivative set.
//!
//! Points are lifted to logarithmic coordinates, where the value, every
//! coordinate derivative, and the parameter derivative of all equations at
//! all points come out of one matrix product with the precomputed tables:
//! `exp(Z_aug * A) * [B_1^T ... B_n^T]`. A diagonal rescaling converts the
//! result to homogeneous coordinates. A scalar monomial-expansion oracle
//! provides an independent route for validation.

use std::ops::Range;

use num_complex::Complex64;
use thiserror::Error;

use crate::kernels::{ComplexMatrix, DenseBackend, KernelError};
use crate::system::{HomogenizedSystem, HomotopyTables, LaurentSystem};

#[derive(Debug, Clone, Error)]
pub enum EvalError {
    #[error("zero coordinate at point {point}, coordinate {coord}: logarithm undefined")]
    ZeroCoordinate { point: usize, coord: usize },
    #[error("monomial overflow at point {point}: evaluation left the double range")]
    MonomialOverflow { point: usize },
    #[error("log coordinates not populated")]
    LogCoordsMissing,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid tau at point {point}: {value} (must be finite and <= 0)")]
    InvalidTau { point: usize, value: f64 },
    #[error("in sub-batch {index}: {source}")]
    InSubBatch { index: usize, source: Box<EvalError> },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// z^e for integer e by repeated squaring; negative exponents go through the
/// reciprocal. Returns `None` for a zero base with negative exponent.
pub(crate) fn int_pow(z: Complex64, e: i64) -> Option<Complex64> {
    if e == 0 {
        return Some(Complex64::ONE);
    }
    if z == Complex64::ZERO {
        return if e > 0 { Some(Complex64::ZERO) } else { None };
    }
    let mut base = z;
    let mut exp = e.unsigned_abs();
    let mut acc = Complex64::ONE;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    Some(if e < 0 { acc.finv() } else { acc })
}

/// A batch of tracked points: homogeneous coordinates row per point, the
/// path parameter per point, and lazily populated logarithms.
#[derive(Debug, Clone)]
pub struct PointBatch {
    y: ComplexMatrix,
    tau: Vec<f64>,
    z: ComplexMatrix,
    z_valid: bool,
}

impl PointBatch {
    pub fn new(y: ComplexMatrix, tau: Vec<f64>) -> Result<Self, EvalError> {
        if tau.len() != y.rows() {
            return Err(EvalError::Shape(format!(
                "{} tau values for {} points",
                tau.len(),
                y.rows()
            )));
        }
        for (i, &t) in tau.iter().enumerate() {
            if !t.is_finite() || t > 0.0 {
                return Err(EvalError::InvalidTau { point: i, value: t });
            }
        }
        let z = ComplexMatrix::zeros(y.rows(), y.cols());
        Ok(Self {
            y,
            tau,
            z,
            z_valid: false,
        })
    }

    /// Lifts affine points (length n rows) by appending 1 as the
    /// homogenizing coordinate.
    pub fn from_affine(x: &ComplexMatrix, tau: Vec<f64>) -> Result<Self, EvalError> {
        let y = ComplexMatrix::from_fn(x.rows(), x.cols() + 1, |i, j| {
            if j < x.cols() {
                x[(i, j)]
            } else {
                Complex64::ONE
            }
        });
        Self::new(y, tau)
    }

    pub fn len(&self) -> usize {
        self.y.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Homogeneous coordinate count N.
    pub fn vars(&self) -> usize {
        self.y.cols()
    }

    pub fn y(&self) -> &ComplexMatrix {
        &self.y
    }

    pub fn point(&self, i: usize) -> &[Complex64] {
        self.y.row(i)
    }

    pub fn tau(&self, i: usize) -> f64 {
        self.tau[i]
    }

    pub fn taus(&self) -> &[f64] {
        &self.tau
    }

    pub fn log_coords(&self) -> Option<&ComplexMatrix> {
        self.z_valid.then_some(&self.z)
    }

    pub fn set_point(&mut self, i: usize, row: &[Complex64]) {
        self.y.row_mut(i).copy_from_slice(row);
        self.z_valid = false;
    }

    pub fn set_tau(&mut self, i: usize, t: f64) {
        debug_assert!(t <= 0.0 && t.is_finite());
        self.tau[i] = t;
    }

    /// y_i += s * dir.
    pub fn add_scaled(&mut self, i: usize, dir: &[Complex64], s: f64) {
        for (y, d) in self.y.row_mut(i).iter_mut().zip(dir) {
            *y += d * s;
        }
        self.z_valid = false;
    }

    pub fn point_norm(&self, i: usize) -> f64 {
        self.y.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Scales y_i to unit norm; returns the previous norm.
    pub fn normalize_point(&mut self, i: usize) -> f64 {
        let norm = self.point_norm(i);
        if norm > 0.0 && norm.is_finite() {
            let inv = 1.0 / norm;
            for y in self.y.row_mut(i).iter_mut() {
                *y *= inv;
            }
        }
        self.z_valid = false;
        norm
    }

    /// Gathers the given rows into a new batch (log coordinates dropped).
    pub fn select(&self, indices: &[usize]) -> PointBatch {
        let y = ComplexMatrix::from_fn(indices.len(), self.vars(), |i, j| self.y[(indices[i], j)]);
        let tau = indices.iter().map(|&i| self.tau[i]).collect();
        PointBatch::new(y, tau).expect("selection preserves validity")
    }
}

/// Populates the logarithmic coordinates with the principal branch
/// (imaginary part in (-pi, pi]); the homogeneous coordinates are unchanged.
pub fn to_log_coords(batch: &PointBatch) -> Result<PointBatch, EvalError> {
    let mut out = batch.clone();
    for i in 0..batch.len() {
        for (j, &v) in batch.y.row(i).iter().enumerate() {
            if v == Complex64::ZERO {
                return Err(EvalError::ZeroCoordinate { point: i, coord: j });
            }
            out.z[(i, j)] = v.ln();
        }
    }
    out.z_valid = true;
    Ok(out)
}

/// Tags which coordinate chart an extended Jacobian batch lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordSystem {
    Log,
    Homogeneous,
}

/// p stacked n x (N+2) blocks. Row k of a block is
/// `[d h_k / d coordinate_0 .. d h_k / d coordinate_{N-1}, d h_k / d tau, h_k]`.
#[derive(Debug, Clone)]
pub struct ExtendedJacobianBatch {
    coords: CoordSystem,
    equations: usize,
    block_cols: usize,
    data: ComplexMatrix,
}

impl ExtendedJacobianBatch {
    pub(crate) fn from_data(
        coords: CoordSystem,
        equations: usize,
        block_cols: usize,
        data: ComplexMatrix,
    ) -> Self {
        debug_assert_eq!(data.cols(), equations * block_cols);
        Self {
            coords,
            equations,
            block_cols,
            data,
        }
    }

    pub fn coords(&self) -> CoordSystem {
        self.coords
    }

    pub fn points(&self) -> usize {
        self.data.rows()
    }

    pub fn equations(&self) -> usize {
        self.equations
    }

    /// N + 2.
    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    pub fn data(&self) -> &ComplexMatrix {
        &self.data
    }

    /// Row of equation `k` in the block of `point`.
    pub fn block_row(&self, point: usize, k: usize) -> &[Complex64] {
        &self.data.row(point)[k * self.block_cols..(k + 1) * self.block_cols]
    }

    pub fn entry(&self, point: usize, k: usize, col: usize) -> Complex64 {
        self.data[(point, k * self.block_cols + col)]
    }

    /// Copy of the n x (N+2) block of one point.
    pub fn block(&self, point: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.equations, self.block_cols, |k, c| self.entry(point, k, c))
    }

    /// Euclidean norm of the function-value column of one point.
    pub fn value_norm(&self, point: usize) -> f64 {
        (0..self.equations)
            .map(|k| self.entry(point, k, self.block_cols - 1).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// One product per batch: `exp(Z_aug A) [B_1^T .. B_n^T]` with the parameter
/// column appended to the logarithmic coordinates. Requires log coordinates.
pub fn eval_extended_jacobian_log(
    batch: &PointBatch,
    tables: &HomotopyTables,
    backend: &dyn DenseBackend,
) -> Result<ExtendedJacobianBatch, EvalError> {
    let z = batch.log_coords().ok_or(EvalError::LogCoordsMissing)?;
    check_dims(batch, tables)?;
    let (data, errors) = eval_log_core(z, batch.taus(), 0, tables, backend)?;
    if let Some((_, e)) = errors.into_iter().next() {
        return Err(e);
    }
    Ok(ExtendedJacobianBatch::from_data(
        CoordSystem::Log,
        tables.equation_count(),
        tables.block_cols(),
        data,
    ))
}

/// Rescales a log-coordinate batch to homogeneous coordinates: the first N
/// columns of every block pick up the factor `exp(-z_j)` of their point; the
/// parameter and value columns are unchanged.
pub fn rescale_to_homogeneous(
    jac: &ExtendedJacobianBatch,
    batch: &PointBatch,
) -> Result<ExtendedJacobianBatch, EvalError> {
    if jac.coords != CoordSystem::Log {
        return Err(EvalError::Shape("input already in homogeneous coordinates".into()));
    }
    if jac.points() != batch.len() || jac.block_cols != batch.vars() + 2 {
        return Err(EvalError::Shape(format!(
            "jacobian batch is {} points x {} block columns, point batch has {} points x {} coordinates",
            jac.points(),
            jac.block_cols,
            batch.len(),
            batch.vars()
        )));
    }
    let z = batch.log_coords().ok_or(EvalError::LogCoordsMissing)?;
    let mut out = jac.clone();
    rescale_rows(&mut out.data, z, jac.equations, jac.block_cols, 0..jac.points());
    out.coords = CoordSystem::Homogeneous;
    Ok(out)
}

/// Full pipeline over sub-batches of size `b`: log coordinates, the batched
/// log-coordinate product, and the homogeneous rescaling. Output does not
/// depend on `b`. Sub-batch failures are tagged with the sub-batch index.
pub fn evaluate_batch(
    points: &PointBatch,
    tables: &HomotopyTables,
    b: usize,
    backend: &dyn DenseBackend,
) -> Result<ExtendedJacobianBatch, EvalError> {
    check_dims(points, tables)?;
    let p = points.len();
    let width = tables.equation_count() * tables.block_cols();
    let mut data = ComplexMatrix::zeros(p, width);
    if p > 0 {
        let b = b.clamp(1, p);
        for (index, start) in (0..p).step_by(b).enumerate() {
            let range = start..(start + b).min(p);
            let (chunk, errors) = eval_span(points, tables, range.clone(), backend)?;
            if let Some((_, source)) = errors.into_iter().next() {
                return Err(EvalError::InSubBatch {
                    index,
                    source: Box::new(source),
                });
            }
            for (li, gi) in range.enumerate() {
                data.row_mut(gi).copy_from_slice(chunk.row(li));
            }
        }
    }
    Ok(ExtendedJacobianBatch::from_data(
        CoordSystem::Homogeneous,
        tables.equation_count(),
        tables.block_cols(),
        data,
    ))
}

/// Default sub-batch size: a quarter of the batch.
pub fn default_batch_size(p: usize) -> usize {
    p.div_ceil(4).max(1)
}

/// Like [`evaluate_batch`] but collects per-point failures instead of
/// aborting, so one bad point cannot poison its siblings. Rows of failed
/// points are zero.
pub(crate) fn evaluate_batch_lenient(
    points: &PointBatch,
    tables: &HomotopyTables,
    b: usize,
    backend: &dyn DenseBackend,
) -> Result<(ExtendedJacobianBatch, Vec<Option<EvalError>>), EvalError> {
    check_dims(points, tables)?;
    let p = points.len();
    let width = tables.equation_count() * tables.block_cols();
    let mut data = ComplexMatrix::zeros(p, width);
    let mut failures: Vec<Option<EvalError>> = vec![None; p];
    if p > 0 {
        let b = b.clamp(1, p);
        for start in (0..p).step_by(b) {
            let range = start..(start + b).min(p);
            let (chunk, errors) = eval_span(points, tables, range.clone(), backend)?;
            for (gi, e) in errors {
                failures[gi] = Some(e);
            }
            for (li, gi) in range.enumerate() {
                data.row_mut(gi).copy_from_slice(chunk.row(li));
            }
        }
    }
    Ok((
        ExtendedJacobianBatch::from_data(
            CoordSystem::Homogeneous,
            tables.equation_count(),
            tables.block_cols(),
            data,
        ),
        failures,
    ))
}

fn check_dims(points: &PointBatch, tables: &HomotopyTables) -> Result<(), EvalError> {
    if points.vars() != tables.variable_count() {
        return Err(EvalError::Shape(format!(
            "points have {} coordinates, tables expect {}",
            points.vars(),
            tables.variable_count()
        )));
    }
    Ok(())
}

/// Evaluates one row range to homogeneous coordinates. Per-point domain
/// failures (zero coordinate, overflow) are reported with global indices and
/// leave a zero row; every other row is unaffected because all steps operate
/// row-independently.
fn eval_span(
    points: &PointBatch,
    tables: &HomotopyTables,
    range: Range<usize>,
    backend: &dyn DenseBackend,
) -> Result<(ComplexMatrix, Vec<(usize, EvalError)>), EvalError> {
    let rows = range.len();
    let nvars = tables.variable_count();
    let mut errors: Vec<(usize, EvalError)> = Vec::new();
    let mut bad = vec![false; rows];

    let mut z = ComplexMatrix::zeros(rows, nvars);
    for (li, gi) in range.clone().enumerate() {
        let mut failed = None;
        for (j, &v) in points.y().row(gi).iter().enumerate() {
            if v == Complex64::ZERO {
                failed = Some(EvalError::ZeroCoordinate { point: gi, coord: j });
                break;
            }
            z[(li, j)] = v.ln();
        }
        if let Some(e) = failed {
            errors.push((gi, e));
            bad[li] = true;
            for v in z.row_mut(li) {
                *v = Complex64::ZERO;
            }
        }
    }

    let (data, overflow) = eval_log_with_mask(&z, points.taus(), range.start, tables, backend, &mut bad)?;
    errors.extend(overflow);

    let mut data = data;
    rescale_masked(&mut data, &z, tables.equation_count(), tables.block_cols(), &bad);
    Ok((data, errors))
}

/// Log-coordinate product for contiguous rows with global index offset.
fn eval_log_core(
    z: &ComplexMatrix,
    taus: &[f64],
    offset: usize,
    tables: &HomotopyTables,
    backend: &dyn DenseBackend,
) -> Result<(ComplexMatrix, Vec<(usize, EvalError)>), EvalError> {
    let mut bad = vec![false; z.rows()];
    eval_log_with_mask(z, taus, offset, tables, backend, &mut bad)
}

fn eval_log_with_mask(
    z: &ComplexMatrix,
    taus: &[f64],
    offset: usize,
    tables: &HomotopyTables,
    backend: &dyn DenseBackend,
    bad: &mut [bool],
) -> Result<(ComplexMatrix, Vec<(usize, EvalError)>), EvalError> {
    let rows = z.rows();
    let nvars = tables.variable_count();
    let mut errors = Vec::new();

    let zaug = ComplexMatrix::from_fn(rows, nvars + 1, |i, j| {
        if j < nvars {
            z[(i, j)]
        } else {
            Complex64::new(taus[offset + i], 0.0)
        }
    });
    let mut mono = backend.elementwise_exp(&backend.gemm(&zaug, tables.exponent_matrix())?);
    for li in 0..rows {
        if bad[li] {
            for v in mono.row_mut(li) {
                *v = Complex64::ZERO;
            }
            continue;
        }
        if !row_finite(mono.row(li)) {
            errors.push((offset + li, EvalError::MonomialOverflow { point: offset + li }));
            bad[li] = true;
            for v in mono.row_mut(li) {
                *v = Complex64::ZERO;
            }
        }
    }

    let mut data = backend.gemm(&mono, tables.stacked())?;
    for li in 0..rows {
        if !bad[li] && !row_finite(data.row(li)) {
            errors.push((offset + li, EvalError::MonomialOverflow { point: offset + li }));
            bad[li] = true;
            for v in data.row_mut(li) {
                *v = Complex64::ZERO;
            }
        }
    }
    Ok((data, errors))
}

fn row_finite(row: &[Complex64]) -> bool {
    row.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

fn rescale_rows(
    data: &mut ComplexMatrix,
    z: &ComplexMatrix,
    equations: usize,
    block_cols: usize,
    rows: Range<usize>,
) {
    let nvars = block_cols - 2;
    for i in rows {
        let scales: Vec<Complex64> = (0..nvars).map(|j| (-z[(i, j)]).exp()).collect();
        let row = data.row_mut(i);
        for k in 0..equations {
            let base = k * block_cols;
            for (j, s) in scales.iter().enumerate() {
                row[base + j] *= s;
            }
        }
    }
}

fn rescale_masked(
    data: &mut ComplexMatrix,
    z: &ComplexMatrix,
    equations: usize,
    block_cols: usize,
    bad: &[bool],
) {
    for i in 0..data.rows() {
        if !bad[i] {
            rescale_rows(data, z, equations, block_cols, i..i + 1);
        }
    }
}

/// Independent oracle: evaluates one point by direct monomial expansion and
/// term-by-term analytic differentiation, without logarithms or matrix
/// products. Output block is in homogeneous coordinates.
pub fn eval_scalar_oracle(
    y: &[Complex64],
    tau: f64,
    hsys: &HomogenizedSystem,
) -> Result<ComplexMatrix, EvalError> {
    let n = hsys.equation_count();
    let nvars = hsys.variable_count();
    if y.len() != nvars {
        return Err(EvalError::Shape(format!(
            "point has {} coordinates, system expects {nvars}",
            y.len()
        )));
    }
    let m = hsys.monomial_count();
    let lifting = hsys.base().lifting_f64();
    let mut out = ComplexMatrix::zeros(n, nvars + 2);

    for i in 0..m {
        let a = &hsys.hom_support()[i];
        let efac = Complex64::new((tau * lifting[i]).exp(), 0.0);
        let mono = monomial_value(y, a)? * efac;

        // d/d y_j of y^a,  one fresh power product per coordinate.
        let mut dy = vec![Complex64::ZERO; nvars];
        for j in 0..nvars {
            if a[j] == 0 {
                continue;
            }
            let mut prod = Complex64::new(a[j] as f64, 0.0) * efac;
            for (l, &yl) in y.iter().enumerate() {
                let e = if l == j { a[l] - 1 } else { a[l] };
                prod *= int_pow(yl, e).ok_or(EvalError::ZeroCoordinate { point: 0, coord: l })?;
            }
            dy[j] = prod;
        }

        for k in 0..n {
            let c = hsys.base().coefficient(k, i);
            if c == Complex64::ZERO {
                continue;
            }
            for (j, d) in dy.iter().enumerate() {
                out[(k, j)] += c * d;
            }
            out[(k, nvars)] += c * lifting[i] * mono;
            out[(k, nvars + 1)] += c * mono;
        }
    }
    Ok(out)
}

fn monomial_value(y: &[Complex64], a: &[i64]) -> Result<Complex64, EvalError> {
    let mut v = Complex64::ONE;
    for (l, (&yl, &e)) in y.iter().zip(a).enumerate() {
        v *= int_pow(yl, e).ok_or(EvalError::ZeroCoordinate { point: 0, coord: l })?;
    }
    Ok(v)
}

/// Affine homotopy values `h_k(x, tau)` by direct expansion.
pub fn eval_affine_values(
    sys: &LaurentSystem,
    x: &[Complex64],
    tau: f64,
) -> Result<Vec<Complex64>, EvalError> {
    let block = eval_affine_extended(sys, x, tau)?;
    Ok((0..sys.equation_count())
        .map(|k| block[(k, sys.equation_count() + 1)])
        .collect())
}

/// Affine extended block `[dH/dx | dH/dtau | H]`, shape n x (n+2), by direct
/// expansion over the original (unhomogenized) support.
pub fn eval_affine_extended(
    sys: &LaurentSystem,
    x: &[Complex64],
    tau: f64,
) -> Result<ComplexMatrix, EvalError> {
    let n = sys.equation_count();
    if x.len() != n {
        return Err(EvalError::Shape(format!(
            "point has {} coordinates, system expects {n}",
            x.len()
        )));
    }
    let lifting = sys.lifting_f64();
    let mut out = ComplexMatrix::zeros(n, n + 2);
    for (i, a) in sys.support().iter().enumerate() {
        let efac = Complex64::new((tau * lifting[i]).exp(), 0.0);
        let mono = monomial_value(x, a)? * efac;
        let mut dx = vec![Complex64::ZERO; n];
        for j in 0..n {
            if a[j] == 0 {
                continue;
            }
            let mut prod = Complex64::new(a[j] as f64, 0.0) * efac;
            for (l, &xl) in x.iter().enumerate() {
                let e = if l == j { a[l] - 1 } else { a[l] };
                prod *= int_pow(xl, e).ok_or(EvalError::ZeroCoordinate { point: 0, coord: l })?;
            }
            dx[j] = prod;
        }
        for k in 0..n {
            let c = sys.coefficient(k, i);
            if c == Complex64::ZERO {
                continue;
            }
            for (j, d) in dx.iter().enumerate() {
                out[(k, j)] += c * d;
            }
            out[(k, n)] += c * lifting[i] * mono;
            out[(k, n + 1)] += c * mono;
        }
    }
    Ok(out)
}
