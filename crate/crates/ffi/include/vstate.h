#ifndef VSTATE_H
#define VSTATE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VsStatus {
  VS_STATUS_OK = 0,
  VS_STATUS_NULL_POINTER = 1,
  VS_STATUS_CONFIG = 2,
  VS_STATUS_PRECONDITION = 3,
  VS_STATUS_DOMAIN = 4,
  VS_STATUS_GEOMETRY = 5,
  VS_STATUS_SINGULAR = 6,
  VS_STATUS_NO_BIFURCATION = 7,
  VS_STATUS_NOT_CONVERGED = 8,
  VS_STATUS_IO = 9,
  VS_STATUS_BUFFER_TOO_SMALL = 10,
  VS_STATUS_OUT_OF_RANGE = 11,
  VS_STATUS_PANIC = 12,
} VsStatus;

/**
 * Which bifurcation point a branch starts from.
 */
typedef enum VsBranchKind {
  VS_BRANCH_KIND_DISC = 0,
  VS_BRANCH_KIND_PLUS = 1,
  VS_BRANCH_KIND_MINUS = 2,
} VsBranchKind;

/**
 * A traced branch.
 */
typedef struct VsBranch VsBranch;

/**
 * A Newton result.
 */
typedef struct VsState VsState;

/**
 * Eigenvalue data of one annulus mode. The eigenvalue fields are valid
 * only when `has_real` is nonzero.
 */
typedef struct VsDcSpectrum {
  double discriminant;
  int32_t has_real;
  double lambda_plus;
  double lambda_minus;
  double omega_plus;
  double omega_minus;
} VsDcSpectrum;

/**
 * Diagnostics of one branch point. `gap_boundaries` and
 * `a_inner_first` are NaN for disc patches.
 */
typedef struct VsBranchPoint {
  double omega;
  double a_first;
  double a_inner_first;
  double sup_residual;
  double gap_unit_circle;
  double gap_boundaries;
  size_t nodes;
} VsBranchPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *vs_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL, or
 * 0 when there is none.
 */
size_t vs_last_error(char *buf, size_t len);

/**
 * `λ_m` and `Ω_m` of the disc of radius `b`.
 */
enum VsStatus vs_sc_eigen(size_t m, double b, double *lambda, double *omega);

/**
 * Eigenvalues of mode `n` around the annulus `b2 < |z| < b1`.
 */
enum VsStatus vs_dc_spectrum(size_t n, double b1, double b2, struct VsDcSpectrum *out);

/**
 * The 1-fold eigenvalues and the bifurcation velocity of `λ_1^+`.
 */
enum VsStatus vs_onefold_eigen(double b1,
                               double b2,
                               double *lambda_minus,
                               double *lambda_plus,
                               double *omega);

/**
 * Fold radius `b_m^⋆` for the outer radius `b1`.
 */
enum VsStatus vs_b_star(size_t m, double b1, double tol, double *out);

/**
 * Writes 1 to `out` when mode `m` bifurcates transversally.
 */
enum VsStatus vs_transversality_ok(size_t m, double b1, double b2, int32_t *out);

/**
 * Newton solve at fixed Ω on an `nodes`-point grid, starting from the
 * first-mode amplitudes `seed_a1` (outer) and `seed_a2` (inner).
 *
 * Pass `b2 = 0` for a disc patch of radius `b1`. On success or
 * non-convergence a state handle is stored in `out`; non-convergence
 * returns `NotConverged`.
 */
enum VsStatus vs_solve(size_t m,
                       double b1,
                       double b2,
                       double omega,
                       size_t nodes,
                       double seed_a1,
                       double seed_a2,
                       struct VsState **out);

/**
 * Number of coefficients of a state (`M` for discs, `2M` for annuli).
 */
enum VsStatus vs_state_len(const struct VsState *state, size_t *out);

/**
 * Copies the coefficients into `buf` of capacity `len`.
 */
enum VsStatus vs_state_coeffs(const struct VsState *state, double *buf, size_t len);

/**
 * Convergence flag, iteration count, residual sup-norm and the trivial flag.
 */
enum VsStatus vs_state_report(const struct VsState *state,
                              int32_t *converged,
                              size_t *iterations,
                              double *sup_norm,
                              int32_t *trivial);

/**
 * Angular velocity of the state.
 */
enum VsStatus vs_state_omega(const struct VsState *state, double *out);

void vs_state_free(struct VsState *state);

/**
 * Traces the m-fold branch from the chosen bifurcation point with default
 * continuation settings, starting on `nodes` points and refining up to
 * `max_nodes`. Pass `b2 = 0` and `VS_BRANCH_KIND_DISC` for disc patches.
 */
enum VsStatus vs_trace_branch(size_t m,
                              double b1,
                              double b2,
                              enum VsBranchKind kind,
                              size_t nodes,
                              size_t max_nodes,
                              size_t max_points,
                              double epsilon,
                              struct VsBranch **out);

enum VsStatus vs_branch_len(const struct VsBranch *branch, size_t *out);

enum VsStatus vs_branch_point(const struct VsBranch *branch,
                              size_t index,
                              struct VsBranchPoint *out);

/**
 * Number of saddle-node folds recorded along the branch.
 */
enum VsStatus vs_branch_fold_count(const struct VsBranch *branch, size_t *out);

/**
 * How the branch ended: 0 boundary touching, 1 corner forming,
 * 2 inner/outer contact, 3 inconclusive.
 */
enum VsStatus vs_branch_limit_kind(const struct VsBranch *branch, int32_t *out);

void vs_branch_free(struct VsBranch *branch);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VSTATE_H */
