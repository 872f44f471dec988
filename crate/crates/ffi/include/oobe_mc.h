#ifndef OOBE_MC_H
#define OOBE_MC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. Values 2..=4 match the command line exit codes.
typedef enum OobeStatus {
  OOBE_STATUS_OK = 0,
  OOBE_STATUS_INVALID_ARGUMENT = 1,
  OOBE_STATUS_CONFIG = 2,
  OOBE_STATUS_PAIRING = 3,
  OOBE_STATUS_IO = 4,
  OOBE_STATUS_NULL_POINTER = 5,
  OOBE_STATUS_PANIC = 6,
} OobeStatus;

typedef enum OobeMetric {
  OOBE_METRIC_GNB = 0,
  OOBE_METRIC_REP_DOWN = 1,
  OOBE_METRIC_UE = 2,
  OOBE_METRIC_REP_UP = 3,
  OOBE_METRIC_DOWN = 4,
  OOBE_METRIC_UP = 5,
  OOBE_METRIC_COMBINED = 6,
} OobeMetric;

// Opaque handle to a finished run.
typedef struct OobeRun OobeRun;

// Opaque scenario handle.
typedef struct OobeScenario OobeScenario;

// One row of the per-trial table.
typedef struct OobeTrialRecord {
  uint64_t trial_index;
  double gnb_dbm;
  double rep_down_dbm;
  double ue_dbm;
  double rep_up_dbm;
  double down_dbm;
  double up_dbm;
  double combined_dbm;
  uint64_t n_gnb;
  uint64_t n_rep;
  uint64_t n_ue_active;
} OobeTrialRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into this library on the same thread.
const char *oobe_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *oobe_version(void);

// # Safety
// `s` must be NULL or a string returned by this library, not yet freed.
void oobe_string_free(char *s);

// Scenario with every field at its default.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle pointer.
enum OobeStatus oobe_scenario_default(struct OobeScenario **out);

// Parse and validate a scenario from JSON text.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum OobeStatus oobe_scenario_from_json(const char *json, struct OobeScenario **out);

// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum OobeStatus oobe_scenario_from_file(const char *path, struct OobeScenario **out);

// Replace one field, addressed by a dotted path, with a JSON literal.
// The scenario is left untouched when the result fails validation.
//
// # Safety
// `scenario` must be a live handle; `path` and `json_value` NUL-terminated.
enum OobeStatus oobe_scenario_set(struct OobeScenario *scenario,
                                  const char *path,
                                  const char *json_value);

// Fully resolved scenario as JSON, or NULL on failure.
//
// # Safety
// `scenario` must be a live handle.
char *oobe_scenario_to_json(const struct OobeScenario *scenario);

// SHA-256 of the resolved scenario, hex encoded, or NULL.
//
// # Safety
// `scenario` must be a live handle.
char *oobe_scenario_hash(const struct OobeScenario *scenario);

// # Safety
// `scenario` must be NULL or a handle from this library, not yet freed.
void oobe_scenario_free(struct OobeScenario *scenario);

// Execute every trial. `threads = 0` picks the worker count automatically.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum OobeStatus oobe_run(const struct OobeScenario *scenario,
                         uint32_t threads,
                         struct OobeRun **out);

// # Safety
// `run` must be a live handle or NULL (returns 0).
uint64_t oobe_run_trial_count(const struct OobeRun *run);

// # Safety
// `run` must be a live handle; `out` must be writable.
enum OobeStatus oobe_run_trial(const struct OobeRun *run,
                               uint64_t index,
                               struct OobeTrialRecord *out);

// Mean of a metric over all trials (linear average), in dBm.
//
// # Safety
// `run` must be a live handle; `out_dbm` must be writable.
enum OobeStatus oobe_run_metric_mean_dbm(const struct OobeRun *run,
                                         enum OobeMetric metric,
                                         double *out_dbm);

// Fraction of trials whose combined power exceeds the scenario threshold.
// Fails with `InvalidArgument` when the scenario has no threshold.
//
// # Safety
// `run` must be a live handle; `out` must be writable.
enum OobeStatus oobe_run_exceedance(const struct OobeRun *run, double *out);

// Run manifest as JSON, or NULL.
//
// # Safety
// `run` must be a live handle.
char *oobe_run_manifest_json(const struct OobeRun *run);

// Write `trials.csv`, `manifest.json` and optionally `cdf.csv` into `dir`.
//
// # Safety
// `run` must be a live handle; `dir` NUL-terminated.
enum OobeStatus oobe_run_write_outputs(const struct OobeRun *run, const char *dir, bool with_cdf);

// # Safety
// `run` must be NULL or a handle from this library, not yet freed.
void oobe_run_free(struct OobeRun *run);

// Mean-of-linear penalty of `variant` over `baseline` for one metric, in dB.
// The runs must differ only in `knob`.
//
// # Safety
// Both runs must be live handles; `knob` NUL-terminated; `out_db` writable.
enum OobeStatus oobe_penalty_empirical(const struct OobeRun *baseline,
                                       const struct OobeRun *variant,
                                       const char *knob,
                                       enum OobeMetric metric,
                                       double *out_db);

// Full penalty report as JSON.
//
// # Safety
// Both runs must be live handles; `knob` NUL-terminated; `out_json` writable.
enum OobeStatus oobe_compare_json(const struct OobeRun *baseline,
                                  const struct OobeRun *variant,
                                  const char *knob,
                                  char **out_json);

// `10·log10(1 + f)`.
double oobe_penalty_closed_form_db(uint32_t f);

// Move an integrated power to another bandwidth assuming a flat spectrum.
//
// # Safety
// `out_dbm` must be writable.
enum OobeStatus oobe_bandwidth_rescale_dbm(double dbm,
                                           double from_bandwidth_hz,
                                           double to_bandwidth_hz,
                                           double *out_dbm);

// Free-space path loss in dB.
//
// # Safety
// `out_db` must be writable.
enum OobeStatus oobe_fspl_db(double frequency_hz, double distance_km, double *out_db);

// # Safety
// `out_km` must be writable.
enum OobeStatus oobe_slant_range_km(double elevation_deg, double altitude_km, double *out_km);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OOBE_MC_H */
