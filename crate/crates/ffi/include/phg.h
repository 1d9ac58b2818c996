/* C interface for the phg polyhedral homotopy engine. */

#ifndef PHG_H
#define PHG_H

/* Generated by cbindgen from phg-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible call.
 */
typedef enum PhgStatus {
  PhgStatus_Ok = 0,
  PhgStatus_NullArgument = 1,
  PhgStatus_InvalidArgument = 2,
  PhgStatus_ParseError = 3,
  PhgStatus_ShapeError = 4,
  PhgStatus_DuplicateMonomial = 5,
  PhgStatus_EmptySupport = 6,
  PhgStatus_InvalidLifting = 7,
  PhgStatus_ZeroCoordinate = 8,
  PhgStatus_MonomialOverflow = 9,
  PhgStatus_SingularJacobian = 10,
  PhgStatus_DegenerateTangent = 11,
  PhgStatus_StartPointInvalid = 12,
  PhgStatus_NumericalError = 13,
  PhgStatus_UnknownBackend = 14,
  PhgStatus_Utf8Error = 15,
} PhgStatus;

/*
 Per-path termination codes reported by [`phg_track`].
 */
typedef enum PhgPathStatus {
  PhgPathStatus_Converged = 0,
  PhgPathStatus_SingularEncountered = 1,
  PhgPathStatus_StepUnderflow = 2,
  PhgPathStatus_MaxSteps = 3,
  PhgPathStatus_Overflowed = 4,
} PhgPathStatus;

/*
 Opaque Laurent system handle.
 */
typedef struct PhgSystem PhgSystem;

/*
 Opaque precomputed-tables handle (homogenized system plus the constant
 evaluation tables).
 */
typedef struct PhgTables PhgTables;

/*
 Tracking options mirrored as a plain C struct. Obtain defaults from
 [`phg_track_options_default`] and adjust fields as needed.
 */
typedef struct PhgTrackOptions {
  double tau0;
  double step_init;
  double step_min;
  double step_max;
  double newton_tol;
  uint32_t newton_max_iters;
  double shrink;
  double grow;
  uint32_t grow_after;
  uint64_t max_steps;
  bool fixed_step_mode;
  uint64_t fixed_steps;
  double accept_tol;
  double start_tol;
  bool skip_start_check;
} PhgTrackOptions;

/*
 Per-path result record filled by [`phg_track`]; final coordinates are
 written to separate caller-provided buffers.
 */
typedef struct PhgPathResult {
  enum PhgPathStatus status;
  double tau;
  double residual;
  uint64_t steps;
  uint64_t newton_iters;
  bool at_infinity;
} PhgPathResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static string.
 */
const char *phg_version(void);

/*
 Message for the most recent failure on this thread. Valid until the next
 failing call on the same thread.
 */
const char *phg_last_error(void);

/*
 Frees a string returned by this library.

 # Safety
 `s` must come from a `phg_*` call that documents `phg_string_free`, or be
 null.
 */
void phg_string_free(char *s);

/*
 Parses a system from its JSON document.

 # Safety
 `text` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum PhgStatus phg_system_parse(const char *text, struct PhgSystem **out);

/*
 Serializes a system to JSON. Free the result with `phg_string_free`.

 # Safety
 `sys` must be a live handle; `out` must be a valid pointer.
 */
enum PhgStatus phg_system_to_json(const struct PhgSystem *sys, char **out);

/*
 Generates the cyclic-n benchmark system with seeded lifting.

 # Safety
 `out` must be a valid pointer.
 */
enum PhgStatus phg_system_cyclic(uintptr_t n, uint64_t seed, struct PhgSystem **out);

/*
 Generates the discretized Chandrasekhar system with seeded lifting.

 # Safety
 `out` must be a valid pointer.
 */
enum PhgStatus phg_system_chandra(uintptr_t n, double c, uint64_t seed, struct PhgSystem **out);

/*
 Generates a seeded random system with up to `m` monomials and exponents
 in `[exp_min, exp_max]`.

 # Safety
 `out` must be a valid pointer.
 */
enum PhgStatus phg_system_random(uintptr_t n,
                                 uintptr_t m,
                                 int64_t exp_min,
                                 int64_t exp_max,
                                 uint64_t seed,
                                 struct PhgSystem **out);

/*
 # Safety
 `sys` must come from this library and not have been freed.
 */
void phg_system_free(struct PhgSystem *sys);

/*
 Equation count n; zero for a null handle.

 # Safety
 `sys` must be a live handle or null.
 */
uintptr_t phg_system_equation_count(const struct PhgSystem *sys);

/*
 Number of distinct monomials m; zero for a null handle.

 # Safety
 `sys` must be a live handle or null.
 */
uintptr_t phg_system_monomial_count(const struct PhgSystem *sys);

/*
 Homogenizes the system and precomputes the evaluation tables.

 # Safety
 `sys` must be a live handle; `out` must be a valid pointer.
 */
enum PhgStatus phg_tables_new(const struct PhgSystem *sys, struct PhgTables **out);

/*
 # Safety
 `tables` must come from this library and not have been freed.
 */
void phg_tables_free(struct PhgTables *tables);

/*
 Homogeneous coordinate count N = n + 1; zero for a null handle.

 # Safety
 `tables` must be a live handle or null.
 */
uintptr_t phg_tables_variable_count(const struct PhgTables *tables);

/*
 Shared homogeneous degree.

 # Safety
 `tables` must be a live handle or null.
 */
int64_t phg_tables_degree(const struct PhgTables *tables);

/*
 Evaluates the homogeneous extended Jacobian blocks of `p` points.

 `y`: `p x N` complex matrix (2*p*N doubles). `tau`: `p` doubles.
 `out_blocks`: `p x n x (N+2)` complex entries (2*p*n*(N+2) doubles).
 `batch_size` 0 selects the default (a quarter of the batch).

 # Safety
 Buffers must be valid for the documented lengths; `tables` must be a
 live handle; `backend` may be null.
 */
enum PhgStatus phg_eval(const struct PhgTables *tables,
                        const double *y,
                        const double *tau,
                        uintptr_t p,
                        uintptr_t batch_size,
                        const char *backend,
                        double *out_blocks);

/*
 Evaluates one point with the scalar oracle (no matrix products), for
 validation against [`phg_eval`]. `out_block`: `n x (N+2)` complex entries.

 # Safety
 Buffers must be valid for the documented lengths; `tables` must be a
 live handle.
 */
enum PhgStatus phg_eval_oracle(const struct PhgTables *tables,
                               const double *y,
                               double tau,
                               double *out_block);

/*
 Computes Euler and Newton directions for `p` points. Outputs are `p x N`
 complex matrices; `out_cond` receives the per-point conditioning signal
 and `out_status` a per-point status (`PHG_OK` on success). Returns the
 first per-point failure status, or `PHG_OK` when every point succeeded.

 # Safety
 Buffers must be valid for the documented lengths; `tables` must be a
 live handle; `backend` may be null.
 */
enum PhgStatus phg_directions(const struct PhgTables *tables,
                              const double *y,
                              const double *tau,
                              uintptr_t p,
                              const char *backend,
                              double *out_euler,
                              double *out_newton,
                              double *out_cond,
                              enum PhgStatus *out_status);

/*
 Fills default tracking options.

 # Safety
 `out` must be a valid pointer.
 */
void phg_track_options_default(struct PhgTrackOptions *out);

/*
 Tracks `p` paths from `tau0` to zero. `y0`: `p x N` complex start points.
 `out_results`: `p` records. `out_y`: `p x N` complex final points.
 `opts` may be null for defaults; `batch_size` 0 selects the default.

 # Safety
 Buffers must be valid for the documented lengths; `tables` must be a
 live handle; `backend` may be null.
 */
enum PhgStatus phg_track(const struct PhgTables *tables,
                         const double *y0,
                         double tau0,
                         uintptr_t p,
                         const struct PhgTrackOptions *opts,
                         const char *backend,
                         uintptr_t batch_size,
                         struct PhgPathResult *out_results,
                         double *out_y);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHG_H */
