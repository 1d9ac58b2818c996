use num_complex::Complex64;

use super::{ComplexMatrix, KernelError};

/// Plain triple-loop product. Serves as the oracle every other backend is
/// checked against. The contraction index runs in ascending order for each
/// output entry, so results do not depend on how callers partition rows.
pub(crate) fn gemm_naive(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, KernelError> {
    if a.cols() != b.rows() {
        return Err(KernelError::Shape(format!(
            "gemm inner dimensions disagree: {}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (p, m, q) = (a.rows(), a.cols(), b.cols());
    let mut out = ComplexMatrix::zeros(p, q);
    if p == 0 || m == 0 || q == 0 {
        return Ok(out);
    }
    for i in 0..p {
        let arow = a.row(i);
        let orow = out.row_mut(i);
        for (k, &aik) in arow.iter().enumerate() {
            let brow = b.row(k);
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

#[allow(dead_code)]
pub(crate) fn gemm_entry(a: &ComplexMatrix, b: &ComplexMatrix, i: usize, j: usize) -> Complex64 {
    let mut s = Complex64::ZERO;
    for k in 0..a.cols() {
        s += a[(i, k)] * b[(k, j)];
    }
    s
}
