use num_complex::Complex64;
use rayon::prelude::*;

use super::{ComplexMatrix, KernelError};

/// Cache-aware product: packs the right operand transposed so every output
/// entry is a dot product of two contiguous slices, and splits output rows
/// across workers. Row results are independent of the partitioning.
pub(crate) fn gemm_blocked(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, KernelError> {
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
    let bt = b.transpose();
    out.data_mut()
        .par_chunks_mut(q)
        .with_min_len(8)
        .enumerate()
        .for_each(|(i, orow)| {
            let arow = a.row(i);
            for (j, o) in orow.iter_mut().enumerate() {
                *o = dot(arow, bt.row(j));
            }
        });
    Ok(out)
}

/// Unrolled complex dot product. The accumulator split depends only on the
/// vector length, so a given row always sums in the same order.
#[inline]
fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let mut acc0 = Complex64::ZERO;
    let mut acc1 = Complex64::ZERO;
    let mut acc2 = Complex64::ZERO;
    let mut acc3 = Complex64::ZERO;
    let mut xc = x.chunks_exact(4);
    let mut yc = y.chunks_exact(4);
    for (xs, ys) in (&mut xc).zip(&mut yc) {
        acc0 += xs[0] * ys[0];
        acc1 += xs[1] * ys[1];
        acc2 += xs[2] * ys[2];
        acc3 += xs[3] * ys[3];
    }
    let mut tail = Complex64::ZERO;
    for (xi, yi) in xc.remainder().iter().zip(yc.remainder()) {
        tail += xi * yi;
    }
    (acc0 + acc1) + (acc2 + acc3) + tail
}
