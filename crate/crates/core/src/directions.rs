//! Euler and Newton directions computed together, per point, from one QR
//! factorization of the bordered transpose.
//!
//! Stacking the homogeneous extended Jacobian block over the row
//! `[conj(y), 0, 0]` gives an N x (N+2) matrix J whose null space is two
//! dimensional: the null vector with trailing components (1, 0) carries the
//! Euler direction, the one with (0, 1) carries the Newton direction. The
//! null space is read off the rightmost two columns of the full unitary
//! factor of J^T.

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::kernels::{ComplexMatrix, DenseBackend, KernelError, QrFactor};

/// Trailing 2x2 blocks with determinant modulus below this are treated as
/// degenerate tangent frames.
pub const TANGENT_DET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Error)]
pub enum DirectionError {
    #[error("jacobian is singular or rank deficient")]
    SingularJacobian,
    #[error("degenerate tangent frame: |det| = {det_abs:.3e}")]
    DegenerateTangent { det_abs: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Kernel(KernelError),
}

/// The unified system: extended Jacobian block over the conjugated-point row.
#[derive(Debug, Clone)]
pub struct BorderedJacobian {
    matrix: ComplexMatrix,
}

impl BorderedJacobian {
    /// N x (N+2) view: top n rows are the homogeneous extended Jacobian,
    /// the bottom row is `[conj(y), 0, 0]`.
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn vars(&self) -> usize {
        self.matrix.rows()
    }
}

/// Stacks a homogeneous extended Jacobian block with the conjugated current
/// point.
pub fn assemble_bordered(
    jac_block: &ComplexMatrix,
    y: &[Complex64],
) -> Result<BorderedJacobian, DirectionError> {
    let n = jac_block.rows();
    let nvars = y.len();
    if jac_block.cols() != nvars + 2 || nvars != n + 1 {
        return Err(DirectionError::Shape(format!(
            "block is {}x{}, point has {} coordinates (expected n x (n+3) block with n+1 coordinates)",
            n,
            jac_block.cols(),
            nvars
        )));
    }
    let matrix = ComplexMatrix::from_fn(nvars, nvars + 2, |i, j| {
        if i < n {
            jac_block[(i, j)]
        } else if j < nvars {
            y[j].conj()
        } else {
            Complex64::ZERO
        }
    });
    Ok(BorderedJacobian { matrix })
}

/// Euler and Newton vectors of one point, with the residual norms of their
/// defining equations and the smallest factorization pivot as a
/// conditioning signal.
#[derive(Debug, Clone)]
pub struct DirectionPair {
    pub euler: Vec<Complex64>,
    pub newton: Vec<Complex64>,
    pub residual_euler: f64,
    pub residual_newton: f64,
    pub cond_signal: f64,
}

/// Batched unified computation. Element `i` of the output corresponds to
/// element `i` of the input; failures are per element.
pub fn euler_newton_unified(
    batch: &[BorderedJacobian],
    backend: &dyn DenseBackend,
) -> Vec<Result<DirectionPair, DirectionError>> {
    let transposed: Vec<ComplexMatrix> = batch.iter().map(|b| b.matrix.transpose()).collect();
    let factors = backend.batched_qr(&transposed);
    batch
        .iter()
        .zip(factors)
        .map(|(bordered, factor)| match factor {
            Ok(f) => directions_from_factor(bordered, &f),
            Err(KernelError::RankDeficient { .. }) => Err(DirectionError::SingularJacobian),
            Err(e) => Err(DirectionError::Kernel(e)),
        })
        .collect()
}

fn directions_from_factor(
    bordered: &BorderedJacobian,
    factor: &QrFactor,
) -> Result<DirectionPair, DirectionError> {
    let nvars = bordered.vars();
    let width = nvars + 2;
    debug_assert_eq!(factor.q.rows(), width);

    // Null basis of J as rows: conjugates of the last two columns of Q.
    let v0: Vec<Complex64> = (0..width).map(|c| factor.q[(c, width - 2)].conj()).collect();
    let v1: Vec<Complex64> = (0..width).map(|c| factor.q[(c, width - 1)].conj()).collect();

    // Row-reduce so the trailing 2x2 block becomes the identity.
    let (w00, w01) = (v0[width - 2], v0[width - 1]);
    let (w10, w11) = (v1[width - 2], v1[width - 1]);
    let det = w00 * w11 - w01 * w10;
    if det.norm() < TANGENT_DET_TOL {
        return Err(DirectionError::DegenerateTangent { det_abs: det.norm() });
    }
    let (i00, i01, i10, i11) = (w11 / det, -w01 / det, -w10 / det, w00 / det);
    let euler: Vec<Complex64> = (0..nvars).map(|c| i00 * v0[c] + i01 * v1[c]).collect();
    let newton: Vec<Complex64> = (0..nvars).map(|c| i10 * v0[c] + i11 * v1[c]).collect();

    let (residual_euler, residual_newton) = residuals(&bordered.matrix, &euler, &newton);
    Ok(DirectionPair {
        euler,
        newton,
        residual_euler,
        residual_newton,
        cond_signal: factor.min_abs_diag,
    })
}

/// Norms of `(dH/dy) E + dH/dtau` and `(dH/dy) Nv + H` over the equation
/// rows of the bordered matrix.
fn residuals(matrix: &ComplexMatrix, euler: &[Complex64], newton: &[Complex64]) -> (f64, f64) {
    let nvars = matrix.rows();
    let n = nvars - 1;
    let mut re = 0.0f64;
    let mut rn = 0.0f64;
    for k in 0..n {
        let row = matrix.row(k);
        let mut ae = row[nvars];
        let mut an = row[nvars + 1];
        for j in 0..nvars {
            ae += row[j] * euler[j];
            an += row[j] * newton[j];
        }
        re += ae.norm_sqr();
        rn += an.norm_sqr();
    }
    (re.sqrt(), rn.sqrt())
}

/// Direct (unbatched) oracle: solves the two bordered N x N linear systems
/// `[dH/dy; conj(y)] E = [-dH/dtau; 0]` and `[dH/dy; conj(y)] Nv = [-H; 0]`
/// with an LU factorization with partial pivoting.
pub fn euler_newton_direct(
    jac_block: &ComplexMatrix,
    y: &[Complex64],
) -> Result<DirectionPair, DirectionError> {
    let bordered = assemble_bordered(jac_block, y)?;
    let nvars = bordered.vars();
    let m = nalgebra::DMatrix::from_fn(nvars, nvars, |i, j| bordered.matrix[(i, j)]);
    let rhs_e = DVector::from_fn(nvars, |i, _| {
        if i < nvars - 1 {
            -bordered.matrix[(i, nvars)]
        } else {
            Complex64::ZERO
        }
    });
    let rhs_n = DVector::from_fn(nvars, |i, _| {
        if i < nvars - 1 {
            -bordered.matrix[(i, nvars + 1)]
        } else {
            Complex64::ZERO
        }
    });
    let lu = m.lu();
    let cond_signal = (0..nvars)
        .map(|i| lu.u()[(i, i)].norm())
        .fold(f64::INFINITY, f64::min);
    let euler = lu.solve(&rhs_e).ok_or(DirectionError::SingularJacobian)?;
    let newton = lu.solve(&rhs_n).ok_or(DirectionError::SingularJacobian)?;
    if !euler.iter().all(|z| z.re.is_finite() && z.im.is_finite())
        || !newton.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    {
        return Err(DirectionError::SingularJacobian);
    }
    let euler: Vec<Complex64> = euler.iter().copied().collect();
    let newton: Vec<Complex64> = newton.iter().copied().collect();
    let (residual_euler, residual_newton) = residuals(&bordered.matrix, &euler, &newton);
    Ok(DirectionPair {
        euler,
        newton,
        residual_euler,
        residual_newton,
        cond_signal,
    })
}

/// Affine-chart directions from an affine extended block `[dH/dx | dH/dtau | H]`
/// of shape n x (n+2): two dense n x n solves.
pub fn affine_directions(
    aff_jac: &ComplexMatrix,
) -> Result<(Vec<Complex64>, Vec<Complex64>), DirectionError> {
    let n = aff_jac.rows();
    if aff_jac.cols() != n + 2 {
        return Err(DirectionError::Shape(format!(
            "affine block is {}x{}, expected {}x{}",
            n,
            aff_jac.cols(),
            n,
            n + 2
        )));
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| aff_jac[(i, j)]);
    let rhs_e = DVector::from_fn(n, |i, _| -aff_jac[(i, n)]);
    let rhs_n = DVector::from_fn(n, |i, _| -aff_jac[(i, n + 1)]);
    let lu = m.lu();
    let e = lu.solve(&rhs_e).ok_or(DirectionError::SingularJacobian)?;
    let nv = lu.solve(&rhs_n).ok_or(DirectionError::SingularJacobian)?;
    if !e.iter().all(|z| z.re.is_finite() && z.im.is_finite())
        || !nv.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    {
        return Err(DirectionError::SingularJacobian);
    }
    Ok((e.iter().copied().collect(), nv.iter().copied().collect()))
}
