use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ComplexMatrix, KernelError};

pub(crate) fn to_nalgebra(a: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_row_iterator(a.rows(), a.cols(), a.data().iter().copied())
}

/// Product delegated to `nalgebra`, standing in for an accelerated library.
pub(crate) fn gemm_external(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, KernelError> {
    if a.cols() != b.rows() {
        return Err(KernelError::Shape(format!(
            "gemm inner dimensions disagree: {}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if a.rows() == 0 || a.cols() == 0 || b.cols() == 0 {
        return Ok(ComplexMatrix::zeros(a.rows(), b.cols()));
    }
    let prod = to_nalgebra(a) * to_nalgebra(b);
    Ok(ComplexMatrix::from_fn(a.rows(), b.cols(), |i, j| prod[(i, j)]))
}
