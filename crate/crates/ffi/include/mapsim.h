#ifndef MAPSIM_H
#define MAPSIM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of every fallible function.
typedef enum MapsimStatus {
  MAPSIM_STATUS_OK = 0,
  MAPSIM_STATUS_NULL_POINTER = 1,
  MAPSIM_STATUS_INVALID_ARGUMENT = 2,
  MAPSIM_STATUS_SCENARIO_ERROR = 3,
  // A plan was produced but violates at least one constraint.
  MAPSIM_STATUS_INFEASIBLE = 4,
  MAPSIM_STATUS_BUFFER_TOO_SMALL = 5,
  MAPSIM_STATUS_INTERNAL = 6,
  MAPSIM_STATUS_PANIC = 7,
} MapsimStatus;

// A MAP deployment plan.
typedef struct MapsimPlan MapsimPlan;

// A validated scenario.
typedef struct MapsimScenario MapsimScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into the library on the same thread.
const char *mapsim_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *mapsim_version(void);

// Loads a bundled preset (`"smallscale"` or `"mediumscale"`).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum MapsimStatus mapsim_scenario_preset(const char *name, struct MapsimScenario **out);

// Parses a scenario from TOML text.
//
// # Safety
// `toml_text` must be a NUL-terminated string and `out` a valid pointer.
enum MapsimStatus mapsim_scenario_from_toml(const char *toml_text, struct MapsimScenario **out);

// Releases a scenario; null is ignored.
//
// # Safety
// `scenario` must come from this library and not be used afterwards.
void mapsim_scenario_free(struct MapsimScenario *scenario);

// Number of users and candidate grid locations.
//
// # Safety
// `scenario` must be a live handle; the out pointers may be null.
enum MapsimStatus mapsim_scenario_sizes(const struct MapsimScenario *scenario,
                                        size_t *users,
                                        size_t *grid_locations);

// Runs SIMBA on the scenario's snapshot. On `MAPSIM_STATUS_OK` `out` holds
// the best feasible plan; on `MAPSIM_STATUS_INFEASIBLE` it holds the
// best-effort plan (or null if nothing could be evaluated).
//
// # Safety
// `scenario` must be a live handle and `out` a valid pointer.
enum MapsimStatus mapsim_simba(const struct MapsimScenario *scenario,
                               size_t monte_carlo_iters,
                               size_t episodes,
                               uint64_t seed,
                               struct MapsimPlan **out);

// Builds a plan from grid location ids.
//
// # Safety
// `locations` must point to `len` values (may be null when `len == 0`).
enum MapsimStatus mapsim_plan_from_locations(const struct MapsimScenario *scenario,
                                             const size_t *locations,
                                             size_t len,
                                             struct MapsimPlan **out);

// Releases a plan; null is ignored.
//
// # Safety
// `plan` must come from this library and not be used afterwards.
void mapsim_plan_free(struct MapsimPlan *plan);

// Deployed MAP count and total deployment cost.
//
// # Safety
// `plan` must be a live handle; the out pointers may be null.
enum MapsimStatus mapsim_plan_summary(const struct MapsimPlan *plan,
                                      size_t *deployed,
                                      double *total_cost);

// Copies the deployed locations (ascending) into `buffer`. `needed`
// always receives the count; `MAPSIM_STATUS_BUFFER_TOO_SMALL` is returned
// when `capacity` is below it.
//
// # Safety
// `buffer` must have room for `capacity` values; `needed` must be valid.
enum MapsimStatus mapsim_plan_locations(const struct MapsimPlan *plan,
                                        size_t *buffer,
                                        size_t capacity,
                                        size_t *needed);

// Mean log network sum-rate of MAX-SNR association over `episodes`
// mobile episodes of `length` steps on `plan`.
//
// # Safety
// Handles must be live and `out` valid.
enum MapsimStatus mapsim_max_snr_log_sum_rate(const struct MapsimScenario *scenario,
                                              const struct MapsimPlan *plan,
                                              size_t episodes,
                                              size_t length,
                                              uint64_t seed,
                                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAPSIM_H */
