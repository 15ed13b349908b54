#ifndef RINGSHEAR_H
#define RINGSHEAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RingshearStatus {
  RINGSHEAR_STATUS_OK = 0,
  RINGSHEAR_STATUS_NULL_POINTER = 1,
  RINGSHEAR_STATUS_INVALID_ARGUMENT = 2,
  RINGSHEAR_STATUS_CONFIG = 3,
  RINGSHEAR_STATUS_PARSE = 4,
  RINGSHEAR_STATUS_STRUCTURAL = 5,
  RINGSHEAR_STATUS_TWISTED_ELEMENT = 6,
  RINGSHEAR_STATUS_DOMAIN_VANISHED = 7,
  RINGSHEAR_STATUS_LINEAR_SOLVER = 8,
  RINGSHEAR_STATUS_NEWTON_FAILED = 9,
  RINGSHEAR_STATUS_IO = 10,
  RINGSHEAR_STATUS_PANIC = 11,
} RingshearStatus;

// Opaque simulation handle.
typedef struct RingshearSim RingshearSim;

// Summary of one time step.
typedef struct RingshearStepReport {
  size_t step;
  double time;
  bool did_connectivity_update;
  bool converged;
  size_t newton_iters;
  size_t n_active_nodes;
  size_t n_active_elems;
  double final_residual;
  // NaN when the case has no analytic solution.
  double max_rel_error;
} RingshearStepReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread. The pointer stays valid
// until the next failing call on the same thread.
const char *ringshear_last_error(void);

// Creates the Couette validation case with its default parameters.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum RingshearStatus ringshear_sim_new_couette(struct RingshearSim **out);

// Creates the packaging machine case at resolution factor `scale` in (0, 1].
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum RingshearStatus ringshear_sim_new_packaging(double scale, struct RingshearSim **out);

// Creates a simulation from a key-value configuration file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer to
// writable storage for a handle.
enum RingshearStatus ringshear_sim_new_from_config(const char *path, struct RingshearSim **out);

// Advances one time step. `report` may be null.
//
// # Safety
// `sim` must be a live handle; `report`, when non-null, must point to
// writable storage.
enum RingshearStatus ringshear_sim_step(struct RingshearSim *sim,
                                        struct RingshearStepReport *report);

// Number of mesh nodes, active or not.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum RingshearStatus ringshear_sim_node_count(const struct RingshearSim *sim, size_t *out);

// Current simulation time.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum RingshearStatus ringshear_sim_time(const struct RingshearSim *sim, double *out);

// Copies the current nodal velocity as interleaved `(u, v)` pairs into
// `buf`, which must hold at least `2 * node_count` values.
//
// # Safety
// `sim` must be a live handle and `buf` valid for `len` writes.
enum RingshearStatus ringshear_sim_copy_velocity(const struct RingshearSim *sim,
                                                 double *buf,
                                                 size_t len);

// Writes the active part of the last solved slab as a legacy VTK file.
//
// # Safety
// `sim` must be a live handle and `path` a NUL-terminated string.
enum RingshearStatus ringshear_sim_write_vtk(const struct RingshearSim *sim, const char *path);

// Releases a handle. Null is ignored.
//
// # Safety
// `sim` must be null or a handle not yet freed.
void ringshear_sim_free(struct RingshearSim *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RINGSHEAR_H */
