//! Batched polyhedral homotopy evaluation and path tracking.
//!
//! A Laurent system over one common support is deformed by per-monomial
//! lifting exponents and lifted both projectively (one balancing coordinate)
//! and logarithmically (coordinates `z = log y`, parameter `tau = log t`).
//! In those coordinates the homotopy value and every partial derivative at a
//! batch of points reduce to a single dense matrix product against
//! precomputed tables, and the Euler (tangent) and Newton (correction)
//! directions of all points come out of one batched QR factorization.
//!
//! Modules:
//! - [`system`]: system model, homogenization, table construction.
//! - [`generators`]: cyclic / Chandrasekhar / random benchmark systems.
//! - [`kernels`]: the dense complex kernels behind a backend abstraction.
//! - [`eval`]: batched extended-Jacobian evaluation plus a scalar oracle.
//! - [`directions`]: unified Euler-Newton directions and a direct solver.
//! - [`tracker`]: predictor-corrector path tracking with step control.
//! - [`io`], [`bench`]: file formats and the wall-clock benchmark harness.

pub mod bench;
pub mod directions;
pub mod eval;
pub mod generators;
pub mod io;
pub mod kernels;
pub mod system;
pub mod tracker;

pub use directions::{
    affine_directions, assemble_bordered, euler_newton_direct, euler_newton_unified,
    BorderedJacobian, DirectionError, DirectionPair,
};
pub use eval::{
    default_batch_size, eval_affine_extended, eval_affine_values, eval_extended_jacobian_log,
    eval_scalar_oracle, evaluate_batch, rescale_to_homogeneous, to_log_coords, CoordSystem,
    EvalError, ExtendedJacobianBatch, PointBatch,
};
pub use generators::{gen_chandra, gen_cyclic, gen_random, seed_on_path, LiftingSource, RandomSystemConfig};
pub use kernels::{BackendKind, ComplexMatrix, DenseBackend, KernelError, QrFactor};
pub use system::{
    build_tables, homogenize, unmix, HomogenizedSystem, HomotopyTables, LaurentSystem, SystemError,
};
pub use tracker::{
    chordal_distance, check_start_points, euler_newton_step, retrace_check, track_batch,
    EvalOptions, PathStatus, TrackError, TrackOptions, TrackResult,
};
