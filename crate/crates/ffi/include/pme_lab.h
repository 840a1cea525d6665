#ifndef PME_LAB_H
#define PME_LAB_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Grid family.
 */
typedef enum PmeGridKind {
  PME_GRID_KIND_INTERVAL = 0,
  PME_GRID_KIND_RADIAL = 1,
} PmeGridKind;

/**
 * Status code returned by every fallible entry point.
 */
typedef enum PmeStatus {
  PME_STATUS_OK = 0,
  PME_STATUS_NULL_POINTER = 1,
  PME_STATUS_INVALID_ARGUMENT = 2,
  PME_STATUS_NON_CONVERGENCE = 3,
  PME_STATUS_NUMERICAL_FAILURE = 4,
  PME_STATUS_BUFFER_TOO_SMALL = 5,
  PME_STATUS_IO = 6,
  PME_STATUS_CHECKS_FAILED = 7,
  PME_STATUS_PANIC = 8,
} PmeStatus;

/**
 * Opaque eigensystem handle.
 */
typedef struct PmeEigenSystem PmeEigenSystem;

/**
 * Opaque grid handle.
 */
typedef struct PmeGrid PmeGrid;

/**
 * Opaque stationary-profile handle.
 */
typedef struct PmeProfile PmeProfile;

/**
 * Opaque trajectory handle.
 */
typedef struct PmeTrajectory PmeTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t pme_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pme_version(void);

/**
 * Builds a uniform vertex-centred grid with `n` interior nodes.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PmeStatus pme_grid_new(enum PmeGridKind kind,
                            size_t dim,
                            double size,
                            size_t n,
                            struct PmeGrid **out);

/**
 * # Safety
 * `grid` must be null or a handle from [`pme_grid_new`] not yet freed.
 */
void pme_grid_free(struct PmeGrid *grid);

/**
 * Number of interior nodes, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t pme_grid_len(const struct PmeGrid *grid);

/**
 * Copies node coordinates into `buf`.
 *
 * # Safety
 * `grid` must be a live handle; `buf` valid for `len` doubles.
 */
enum PmeStatus pme_grid_nodes(const struct PmeGrid *grid, double *buf, size_t len);

/**
 * Solves for the stationary profile `Θ` with exponent `p` in (0, 1).
 *
 * # Safety
 * `grid` must be a live handle; `out` valid for writes.
 */
enum PmeStatus pme_profile_solve(const struct PmeGrid *grid,
                                 double p,
                                 double tol,
                                 struct PmeProfile **out);

/**
 * # Safety
 * `profile` must be null or a live handle.
 */
void pme_profile_free(struct PmeProfile *profile);

/**
 * Copies `Θ` at the grid nodes into `buf`.
 *
 * # Safety
 * `profile` must be a live handle; `buf` valid for `len` doubles.
 */
enum PmeStatus pme_profile_theta(const struct PmeProfile *profile, double *buf, size_t len);

/**
 * Copies `S = Θ^p` at the grid nodes into `buf`.
 *
 * # Safety
 * `profile` must be a live handle; `buf` valid for `len` doubles.
 */
enum PmeStatus pme_profile_s(const struct PmeProfile *profile, double *buf, size_t len);

/**
 * Boundary slope of `Θ`.
 *
 * # Safety
 * `profile` must be a live handle; `out` valid for writes.
 */
enum PmeStatus pme_profile_slope(const struct PmeProfile *profile, double *out);

/**
 * Lowest `k` eigenpairs of the operator linearized about `profile`.
 *
 * # Safety
 * `profile` must be a live handle; `out` valid for writes.
 */
enum PmeStatus pme_spectrum_solve(const struct PmeProfile *profile,
                                  size_t k,
                                  double tol,
                                  struct PmeEigenSystem **out);

/**
 * # Safety
 * `sys` must be null or a live handle.
 */
void pme_spectrum_free(struct PmeEigenSystem *sys);

/**
 * Number of computed eigenpairs, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
size_t pme_spectrum_len(const struct PmeEigenSystem *sys);

/**
 * Eigenvalue `mu_j`, with `j` counted from 1.
 *
 * # Safety
 * `sys` must be a live handle; `out` valid for writes.
 */
enum PmeStatus pme_spectrum_eigenvalue(const struct PmeEigenSystem *sys, size_t j, double *out);

/**
 * Weighted-orthonormal eigenvector `psi_j`, with `j` counted from 1.
 *
 * # Safety
 * `sys` must be a live handle; `buf` valid for `len` doubles.
 */
enum PmeStatus pme_spectrum_eigenvector(const struct PmeEigenSystem *sys,
                                        size_t j,
                                        double *buf,
                                        size_t len);

/**
 * Marches `u_t = Δ(u^m)` from `u0` to `t_end` with constant step `dt`,
 * storing every `store_every`-th state.
 *
 * # Safety
 * `grid` must be a live handle; `u0` valid for `len` doubles; `out` valid for writes.
 */
enum PmeStatus pme_evolve(const struct PmeGrid *grid,
                          double m,
                          const double *u0,
                          size_t len,
                          double dt,
                          double t_end,
                          size_t store_every,
                          struct PmeTrajectory **out);

/**
 * # Safety
 * `traj` must be null or a live handle.
 */
void pme_trajectory_free(struct PmeTrajectory *traj);

/**
 * Number of stored snapshots, or 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t pme_trajectory_len(const struct PmeTrajectory *traj);

/**
 * Time of snapshot `k`, counted from 0.
 *
 * # Safety
 * `traj` must be a live handle; `out` valid for writes.
 */
enum PmeStatus pme_trajectory_time(const struct PmeTrajectory *traj, size_t k, double *out);

/**
 * State of snapshot `k`, counted from 0.
 *
 * # Safety
 * `traj` must be a live handle; `buf` valid for `len` doubles.
 */
enum PmeStatus pme_trajectory_field(const struct PmeTrajectory *traj,
                                    size_t k,
                                    double *buf,
                                    size_t len);

/**
 * Runs the experiments of a TOML config file. Returns
 * [`PmeStatus::ChecksFailed`] when the run completes but a check fails.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
enum PmeStatus pme_run_config(const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PME_LAB_H */
