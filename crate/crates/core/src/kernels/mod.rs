//! Portable dense complex linear algebra: general matrix multiplication,
//! elementwise exponential, and batched thin QR via Householder reflections.
//!
//! All operations sit behind [`DenseBackend`] so accelerated implementations
//! can be swapped in without touching callers. The `reference` backend is the
//! oracle: every other backend must reproduce it to 1e-12 normwise.

mod blocked;
mod external;
mod matrix;
mod qr;
mod reference;

use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

pub use matrix::ComplexMatrix;
pub use qr::{default_rank_tol, householder_qr, QrFactor};

#[derive(Debug, Clone, Error)]
pub enum KernelError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("rank deficient at column {column}: |R_ii| = {diag_abs:.3e} below tolerance {tol:.3e}")]
    RankDeficient {
        column: usize,
        diag_abs: f64,
        tol: f64,
    },
}

/// Compute backend selection, taken from configuration (`--backend` or the
/// `PHG_BACKEND` environment variable).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackendKind {
    /// Straightforward loops, serial. The correctness oracle.
    #[default]
    Reference,
    /// Packed, unrolled kernels with row-partitioned parallelism.
    Blocked,
    /// Delegates the matrix product to an external library (`nalgebra`).
    External,
}

impl BackendKind {
    pub fn instance(self) -> &'static dyn DenseBackend {
        match self {
            BackendKind::Reference => &ReferenceBackend,
            BackendKind::Blocked => &BlockedBackend,
            BackendKind::External => &ExternalBackend,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Reference => "reference",
            BackendKind::Blocked => "blocked",
            BackendKind::External => "external",
        }
    }

    pub fn all() -> [BackendKind; 3] {
        [BackendKind::Reference, BackendKind::Blocked, BackendKind::External]
    }
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reference" => Ok(BackendKind::Reference),
            "blocked" => Ok(BackendKind::Blocked),
            "external" => Ok(BackendKind::External),
            other => Err(format!(
                "unknown backend '{other}' (expected reference, blocked, or external)"
            )),
        }
    }
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The kernel surface used by the evaluation and direction engines.
pub trait DenseBackend: Sync {
    fn name(&self) -> &'static str;

    /// Exact mathematical product in double precision.
    fn gemm(&self, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, KernelError>;

    /// Entrywise complex exponential. Overflow yields infinities; callers
    /// that care must inspect the result.
    fn elementwise_exp(&self, a: &ComplexMatrix) -> ComplexMatrix {
        a.map(|z| z.exp())
    }

    /// Per-matrix Householder QR. Output order matches input order and each
    /// element is factored independently, so partitioning the batch across
    /// workers cannot change the results.
    fn batched_qr(&self, batch: &[ComplexMatrix]) -> Vec<Result<QrFactor, KernelError>> {
        batch
            .iter()
            .map(|m| householder_qr(m, default_rank_tol(m.rows())))
            .collect()
    }
}

struct ReferenceBackend;

impl DenseBackend for ReferenceBackend {
    fn name(&self) -> &'static str {
        "reference"
    }

    fn gemm(&self, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, KernelError> {
        reference::gemm_naive(a, b)
    }
}

struct BlockedBackend;

impl DenseBackend for BlockedBackend {
    fn name(&self) -> &'static str {
        "blocked"
    }

    fn gemm(&self, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, KernelError> {
        blocked::gemm_blocked(a, b)
    }

    fn batched_qr(&self, batch: &[ComplexMatrix]) -> Vec<Result<QrFactor, KernelError>> {
        batch
            .par_iter()
            .map(|m| householder_qr(m, default_rank_tol(m.rows())))
            .collect()
    }
}

struct ExternalBackend;

impl DenseBackend for ExternalBackend {
    fn name(&self) -> &'static str {
        "external"
    }

    fn gemm(&self, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, KernelError> {
        external::gemm_external(a, b)
    }

    fn batched_qr(&self, batch: &[ComplexMatrix]) -> Vec<Result<QrFactor, KernelError>> {
        batch
            .par_iter()
            .map(|m| householder_qr(m, default_rank_tol(m.rows())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn rel_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        let mut num = 0.0f64;
        for (x, y) in a.data().iter().zip(b.data()) {
            num += (x - y).norm_sqr();
        }
        num.sqrt() / b.frobenius_norm().max(1e-300)
    }

    #[test]
    fn identity_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_matrix(&mut rng, 3, 3);
        let got = BackendKind::Reference
            .instance()
            .gemm(&ComplexMatrix::identity(3), &x)
            .unwrap();
        assert_eq!(got, x);
    }

    #[test]
    fn complex_arithmetic_enters() {
        // [[1, i], [0, 1]] * [[1], [i]] = [[0], [i]]
        let i = Complex64::I;
        let a = ComplexMatrix::from_rows(&[
            vec![Complex64::ONE, i],
            vec![Complex64::ZERO, Complex64::ONE],
        ]);
        let b = ComplexMatrix::from_rows(&[vec![Complex64::ONE], vec![i]]);
        let c = BackendKind::Reference.instance().gemm(&a, &b).unwrap();
        assert!((c[(0, 0)]).norm() < 1e-15);
        assert!((c[(1, 0)] - i).norm() < 1e-15);
    }

    #[test]
    fn backends_match_triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 7, 5);
        let b = random_matrix(&mut rng, 5, 4);
        let mut oracle = ComplexMatrix::zeros(7, 4);
        for i in 0..7 {
            for j in 0..4 {
                oracle[(i, j)] = reference::gemm_entry(&a, &b, i, j);
            }
        }
        for kind in BackendKind::all() {
            let got = kind.instance().gemm(&a, &b).unwrap();
            assert!(rel_diff(&got, &oracle) < 1e-13, "{} mismatch", kind);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(4, 2);
        for kind in BackendKind::all() {
            assert!(matches!(
                kind.instance().gemm(&a, &b),
                Err(KernelError::Shape(_))
            ));
        }
    }

    #[test]
    fn exp_of_zero_matrix_is_ones() {
        let z = ComplexMatrix::zeros(2, 3);
        let e = BackendKind::Reference.instance().elementwise_exp(&z);
        assert!(e.data().iter().all(|v| (v - Complex64::ONE).norm() == 0.0));
    }

    #[test]
    fn exp_euler_identity() {
        let a = ComplexMatrix::from_rows(&[vec![Complex64::new(0.0, std::f64::consts::PI)]]);
        let e = BackendKind::Reference.instance().elementwise_exp(&a);
        assert!((e[(0, 0)] + Complex64::ONE).norm() < 1e-15);
    }

    #[test]
    fn exp_matches_scalar_exp_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 4, 4);
        for kind in BackendKind::all() {
            let e = kind.instance().elementwise_exp(&a);
            for (x, y) in e.data().iter().zip(a.data()) {
                assert_eq!(*x, y.exp());
            }
        }
    }

    #[test]
    fn gemm_associativity_against_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 8, 8);
            let b = random_matrix(&mut rng, 8, 8);
            let c = random_matrix(&mut rng, 8, 8);
            let be = BackendKind::Reference.instance();
            let left = be.gemm(&be.gemm(&a, &b).unwrap(), &c).unwrap();
            let right = be.gemm(&a, &be.gemm(&b, &c).unwrap()).unwrap();
            assert!(rel_diff(&left, &right) < 1e-10);
        }
    }

    #[test]
    fn batched_qr_isolates_bad_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let good = random_matrix(&mut rng, 5, 3);
        let bad = ComplexMatrix::zeros(5, 3);
        for kind in BackendKind::all() {
            let out = kind.instance().batched_qr(&[good.clone(), bad.clone(), good.clone()]);
            assert!(out[0].is_ok());
            assert!(matches!(out[1], Err(KernelError::RankDeficient { .. })));
            assert!(out[2].is_ok());
        }
    }

    #[test]
    fn batched_qr_unitarity_across_backends() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let batch: Vec<ComplexMatrix> = (0..8).map(|_| random_matrix(&mut rng, 6, 4)).collect();
        for kind in BackendKind::all() {
            for f in kind.instance().batched_qr(&batch) {
                let f = f.unwrap();
                let qhq = kind
                    .instance()
                    .gemm(&f.q.conjugate_transpose(), &f.q)
                    .unwrap();
                for i in 0..6 {
                    for j in 0..6 {
                        let expect = if i == j { Complex64::ONE } else { Complex64::ZERO };
                        assert!((qhq[(i, j)] - expect).norm() <= 1e-12);
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn blocked_and_external_agree_with_reference(
            seed in 0u64..1000,
            p in 1usize..10,
            m in 1usize..12,
            q in 1usize..10,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, p, m);
            let b = random_matrix(&mut rng, m, q);
            let oracle = BackendKind::Reference.instance().gemm(&a, &b).unwrap();
            for kind in [BackendKind::Blocked, BackendKind::External] {
                let got = kind.instance().gemm(&a, &b).unwrap();
                prop_assert!(rel_diff(&got, &oracle) < 1e-12);
            }
        }
    }
}
