use num_complex::Complex64;

use super::{ComplexMatrix, KernelError};

/// Thin QR factorization of an `r x c` matrix (`r >= c`) with the unitary
/// factor assembled explicitly: input = Q [R; 0].
///
/// `q` is `r x r`, `r` is the `c x c` upper-triangular top block.
/// `min_abs_diag` is the smallest `|R_ii|`, kept as a conditioning signal
/// for downstream consumers.
#[derive(Clone, Debug)]
pub struct QrFactor {
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
    pub min_abs_diag: f64,
}

/// Default rank tolerance, scaled by the row count of the factored matrix.
pub fn default_rank_tol(rows: usize) -> f64 {
    1e-12 * rows as f64
}

/// Householder QR with explicit accumulation of the full unitary factor.
///
/// Column `i` is declared rank deficient when `|R_ii|` falls below
/// `rank_tol` times the norm of input column `i`.
pub fn householder_qr(a: &ComplexMatrix, rank_tol: f64) -> Result<QrFactor, KernelError> {
    let rows = a.rows();
    let cols = a.cols();
    if rows < cols {
        return Err(KernelError::Shape(format!(
            "QR input must be tall or square, got {rows}x{cols}"
        )));
    }

    let col_norms: Vec<f64> = (0..cols).map(|j| a.column_norm(j)).collect();

    let mut work = a.clone();
    // Reflector k is H = I - beta v v^H acting on rows k..rows.
    let mut reflectors: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
    let mut betas = vec![0.0f64; cols];

    for k in 0..cols {
        let tail = rows - k;
        let mut v: Vec<Complex64> = (0..tail).map(|i| work[(k + i, k)]).collect();
        let norm_x = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let x0 = v[0];
        let phase = if x0 == Complex64::ZERO {
            Complex64::ONE
        } else {
            x0 / x0.norm()
        };
        // v = x - alpha e1 with alpha = -phase * ||x|| avoids cancellation.
        let alpha = -phase * norm_x;
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let beta = 2.0 / vnorm2;

        for j in k..cols {
            let mut s = Complex64::ZERO;
            for (i, vi) in v.iter().enumerate() {
                s += vi.conj() * work[(k + i, j)];
            }
            s *= beta;
            for (i, vi) in v.iter().enumerate() {
                let w = work[(k + i, j)];
                work[(k + i, j)] = w - s * vi;
            }
        }
        reflectors.push(v);
        betas[k] = beta;
    }

    // Q = H_0 H_1 ... H_{c-1}; apply reflectors to the identity in reverse.
    let mut q = ComplexMatrix::identity(rows);
    for k in (0..cols).rev() {
        let v = &reflectors[k];
        if v.is_empty() {
            continue;
        }
        let beta = betas[k];
        for j in 0..rows {
            let mut s = Complex64::ZERO;
            for (i, vi) in v.iter().enumerate() {
                s += vi.conj() * q[(k + i, j)];
            }
            s *= beta;
            for (i, vi) in v.iter().enumerate() {
                let w = q[(k + i, j)];
                q[(k + i, j)] = w - s * vi;
            }
        }
    }

    let mut r = ComplexMatrix::zeros(cols, cols);
    for i in 0..cols {
        for j in i..cols {
            r[(i, j)] = work[(i, j)];
        }
    }

    let mut min_abs_diag = f64::INFINITY;
    for i in 0..cols {
        let d = r[(i, i)].norm();
        min_abs_diag = min_abs_diag.min(d);
        let tol = rank_tol * col_norms[i];
        if col_norms[i] == 0.0 || d < tol {
            return Err(KernelError::RankDeficient {
                column: i,
                diag_abs: d,
                tol,
            });
        }
    }

    Ok(QrFactor { q, r, min_abs_diag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{BackendKind, DenseBackend};

    fn reconstruct(f: &QrFactor, rows: usize, cols: usize) -> ComplexMatrix {
        // Q [R; 0]
        let mut padded = ComplexMatrix::zeros(rows, cols);
        for i in 0..cols {
            for j in 0..cols {
                padded[(i, j)] = f.r[(i, j)];
            }
        }
        BackendKind::Reference
            .instance()
            .gemm(&f.q, &padded)
            .unwrap()
    }

    fn unitarity_defect(q: &ComplexMatrix) -> f64 {
        let qhq = BackendKind::Reference
            .instance()
            .gemm(&q.conjugate_transpose(), q)
            .unwrap();
        let mut defect = 0.0f64;
        for i in 0..qhq.rows() {
            for j in 0..qhq.cols() {
                let expect = if i == j { Complex64::ONE } else { Complex64::ZERO };
                defect = defect.max((qhq[(i, j)] - expect).norm());
            }
        }
        defect
    }

    #[test]
    fn unit_column_is_already_triangular() {
        let a = ComplexMatrix::from_real_rows(&[vec![1.0], vec![0.0], vec![0.0]]);
        let f = householder_qr(&a, default_rank_tol(3)).unwrap();
        assert!((f.r[(0, 0)].norm() - 1.0).abs() < 1e-15);
        assert!(f.min_abs_diag > 0.999);
        for i in 0..3 {
            for j in 0..3 {
                let got = f.q[(i, j)].norm();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((got - want).abs() < 1e-14, "Q not diagonal up to phases");
            }
        }
        let rec = reconstruct(&f, 3, 1);
        assert!((rec[(0, 0)] - Complex64::ONE).norm() < 1e-14);
    }

    #[test]
    fn identity_over_padding_rows() {
        let n = 4;
        let mut a = ComplexMatrix::zeros(n + 2, n);
        for i in 0..n {
            a[(i, i)] = Complex64::ONE;
        }
        let f = householder_qr(&a, default_rank_tol(n + 2)).unwrap();
        for i in 0..n {
            assert!((f.r[(i, i)].norm() - 1.0).abs() < 1e-14);
        }
        // Last two columns of Q live entirely in the padding rows.
        for j in n..n + 2 {
            for i in 0..n {
                assert!(f.q[(i, j)].norm() < 1e-14);
            }
        }
        assert!(unitarity_defect(&f.q) < 1e-12);
    }

    #[test]
    fn random_batch_reconstructs() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..32 {
            let a = ComplexMatrix::from_fn(6, 4, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let f = householder_qr(&a, default_rank_tol(6)).unwrap();
            let rec = reconstruct(&f, 6, 4);
            let mut diff = 0.0f64;
            for i in 0..6 {
                for j in 0..4 {
                    diff = diff.max((rec[(i, j)] - a[(i, j)]).norm());
                }
            }
            assert!(diff <= 1e-12 * a.frobenius_norm().max(1.0));
            assert!(unitarity_defect(&f.q) <= 1e-12);
        }
    }

    #[test]
    fn duplicate_columns_are_rank_deficient() {
        let a = ComplexMatrix::from_real_rows(&[
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![3.0, 3.0],
        ]);
        match householder_qr(&a, default_rank_tol(3)) {
            Err(KernelError::RankDeficient { column, .. }) => assert_eq!(column, 1),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn zero_column_is_rank_deficient() {
        let a = ComplexMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert!(matches!(
            householder_qr(&a, default_rank_tol(3)),
            Err(KernelError::RankDeficient { column: 1, .. })
        ));
    }

    #[test]
    fn wide_input_rejected() {
        let a = ComplexMatrix::zeros(2, 4);
        assert!(matches!(
            householder_qr(&a, 1e-12),
            Err(KernelError::Shape(_))
        ));
    }
}
