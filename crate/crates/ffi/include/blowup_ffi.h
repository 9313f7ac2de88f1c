#ifndef BLOWUP_FFI_H
#define BLOWUP_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum BlowupStatus {
  BLOWUP_STATUS_OK = 0,
  BLOWUP_STATUS_NULL_POINTER = 1,
  BLOWUP_STATUS_INVALID_ARGUMENT = 2,
  BLOWUP_STATUS_UNKNOWN_KEY = 3,
  BLOWUP_STATUS_DIVERGED = 4,
  BLOWUP_STATUS_IO = 5,
  BLOWUP_STATUS_OUT_OF_RANGE = 6,
  BLOWUP_STATUS_FAILED = 7,
  BLOWUP_STATUS_PANIC = 8,
} BlowupStatus;

/**
 * How a trajectory ended.
 */
typedef enum BlowupRunStatus {
  BLOWUP_RUN_STATUS_TRAPPED = 0,
  BLOWUP_RUN_STATUS_EXITED = 1,
  BLOWUP_RUN_STATUS_DIVERGED = 2,
} BlowupRunStatus;

/**
 * Opaque configuration handle.
 */
typedef struct BlowupConfig BlowupConfig;

/**
 * Opaque trajectory handle.
 */
typedef struct BlowupTrajectory BlowupTrajectory;

/**
 * One observer tick.
 */
typedef struct BlowupTick {
  double s;
  double q_modes[3];
  double qt_modes[3];
  /**
   * Bound usage of each component, in the order q0, q1, q2, q-, qe,
   * qt0, qt1, qt2, qt-, qte.
   */
  double usage[10];
  bool member;
  /**
   * Index of the most used component.
   */
  int32_t worst;
} BlowupTick;

typedef struct BlowupExit {
  enum BlowupRunStatus status;
  double s_exit;
  /**
   * Component index, or -1 when the run never left the set.
   */
  int32_t mode;
  double sign;
  double crossing_rate;
} BlowupExit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t blowup_last_error(char *buf, size_t len);

/**
 * `h_m(y)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BlowupStatus blowup_hermite(size_t m, double y, double *out);

/**
 * `2^m m!`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BlowupStatus blowup_hermite_norm_sq(size_t m, double *out);

/**
 * Kernel of `exp(psi L)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BlowupStatus blowup_mehler_kernel(double psi, double y, double x, double *out);

/**
 * `f(z) = 8 / (8 + z^2)`.
 */
double blowup_profile_f(double z);

/**
 * `phi(y, s) = f(y / sqrt(s)) + 1 / (4 s)`.
 */
double blowup_profile_phi(double y, double s);

/**
 * Runs the basis and kernel property suite; `corrupt_norm < 0` disables
 * the fault hook.
 *
 * # Safety
 * `passed` must be a valid pointer.
 */
enum BlowupStatus blowup_basis_check(int32_t corrupt_norm, bool *passed);

/**
 * New configuration with default values. Release with
 * [`blowup_config_free`].
 */
struct BlowupConfig *blowup_config_new(void);

/**
 * # Safety
 * `cfg` must come from [`blowup_config_new`] and not be used afterwards.
 */
void blowup_config_free(struct BlowupConfig *cfg);

/**
 * Sets one key.
 *
 * # Safety
 * `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum BlowupStatus blowup_config_set(struct BlowupConfig *cfg, const char *key, const char *value);

/**
 * Applies a `key = value` file on top of the current values.
 *
 * # Safety
 * `cfg` must be a live handle; `path` a NUL-terminated string.
 */
enum BlowupStatus blowup_config_load(struct BlowupConfig *cfg, const char *path);

/**
 * Runs one trajectory with `params = (d0, d1, dt0, dt1)` up to the
 * configured horizon, keeping snapshots. It stops at the first exit.
 *
 * # Safety
 * `cfg` must be a live handle, `params` point to 4 doubles and `out` be
 * writable. Release the result with [`blowup_trajectory_free`].
 */
enum BlowupStatus blowup_simulate(const struct BlowupConfig *cfg,
                                  const double *params,
                                  struct BlowupTrajectory **out);

/**
 * Searches for a trapped trajectory and returns the best one with
 * snapshots. `trapped` reports whether the horizon was reached.
 *
 * # Safety
 * `cfg` must be a live handle; `out` and `trapped` writable.
 */
enum BlowupStatus blowup_shoot(const struct BlowupConfig *cfg,
                               struct BlowupTrajectory **out,
                               bool *trapped);

/**
 * Reads a trajectory directory.
 *
 * # Safety
 * `dir` must be a NUL-terminated string; `out` writable.
 */
enum BlowupStatus blowup_trajectory_load(const char *dir, struct BlowupTrajectory **out);

/**
 * Writes a trajectory directory; `cfg` supplies the recorded settings.
 *
 * # Safety
 * `traj` and `cfg` must be live handles; `dir` a NUL-terminated string.
 */
enum BlowupStatus blowup_trajectory_write(const struct BlowupTrajectory *traj,
                                          const struct BlowupConfig *cfg,
                                          const char *dir);

/**
 * # Safety
 * `traj` must come from this library and not be used afterwards.
 */
void blowup_trajectory_free(struct BlowupTrajectory *traj);

/**
 * Number of observer ticks, 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t blowup_trajectory_tick_count(const struct BlowupTrajectory *traj);

/**
 * Copies tick `index`.
 *
 * # Safety
 * `traj` must be a live handle; `out` writable.
 */
enum BlowupStatus blowup_trajectory_tick(const struct BlowupTrajectory *traj,
                                         size_t index,
                                         struct BlowupTick *out);

/**
 * Copies the exit summary.
 *
 * # Safety
 * `traj` must be a live handle; `out` writable.
 */
enum BlowupStatus blowup_trajectory_exit(const struct BlowupTrajectory *traj,
                                         struct BlowupExit *out);

/**
 * Copies `(d0, d1, dt0, dt1)`.
 *
 * # Safety
 * `traj` must be a live handle; `out` must point to 4 writable doubles.
 */
enum BlowupStatus blowup_trajectory_params(const struct BlowupTrajectory *traj, double *out);

/**
 * Runs every reconstruction check on a trajectory, using the verification
 * settings of `cfg`. `passed` is true when all checks pass.
 *
 * # Safety
 * `traj` and `cfg` must be live handles; `passed` writable.
 */
enum BlowupStatus blowup_verify(const struct BlowupTrajectory *traj,
                                const struct BlowupConfig *cfg,
                                bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLOWUP_FFI_H */
