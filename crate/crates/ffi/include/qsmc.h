#ifndef QSMC_H
#define QSMC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QsmcStatus {
  QSMC_STATUS_OK = 0,
  QSMC_STATUS_NULL_POINTER = 1,
  QSMC_STATUS_INVALID_ARGUMENT = 2,
  QSMC_STATUS_CONFIG = 3,
  QSMC_STATUS_DIVERGENCE = 4,
  QSMC_STATUS_IO = 5,
  QSMC_STATUS_OUT_OF_RANGE = 6,
  QSMC_STATUS_VERIFY_FAILED = 7,
  QSMC_STATUS_PANIC = 8,
} QsmcStatus;

typedef struct QsmcRunLog QsmcRunLog;

// Scenario built from a preset or config text; keys can be overridden.
typedef struct QsmcScenario QsmcScenario;

// One logged sample. Quaternions are `(w, x, y, z)`.
typedef struct QsmcRow {
  double t;
  double q[4];
  double q_d[4];
  double omega[3];
  double q_e[4];
  double omega_e[3];
  double s[3];
  double torque[3];
  int8_t branch;
} QsmcRow;

// Run summary; `inf` marks a threshold never reached and `NaN` a field
// that does not apply to the controller.
typedef struct QsmcMetrics {
  double settling_time;
  double steady_state_s_max;
  double peak_effort;
  double integral_effort;
  double unwinding_ratio;
  uint64_t manifold_switches;
  double layer_hit_time;
  uint64_t layer_exits;
  double max_torque_jump;
  double min_estimate_eigenvalue;
  double max_lyapunov_increase;
} QsmcMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failing call on this thread; empty if none.
// The pointer stays valid until the next failing call on the same thread.
const char *qsmc_last_error_message(void);

// # Safety
// `name` must be a nul-terminated string and `out` a valid pointer.
enum QsmcStatus qsmc_scenario_preset(const char *name, struct QsmcScenario **out);

// Parses `key = value` config text.
//
// # Safety
// `text` must be a nul-terminated string and `out` a valid pointer.
enum QsmcStatus qsmc_scenario_from_config(const char *text, struct QsmcScenario **out);

// Overrides one config key, e.g. `("sim.dt", "5e-4")`. The scenario is left
// unchanged if the result does not validate.
//
// # Safety
// `scenario` must come from this library; strings must be nul-terminated.
enum QsmcStatus qsmc_scenario_set(struct QsmcScenario *scenario,
                                  const char *key,
                                  const char *value);

// Number of integration steps the scenario will take.
//
// # Safety
// `scenario` must come from this library or be null.
uint64_t qsmc_scenario_steps(const struct QsmcScenario *scenario);

// # Safety
// `scenario` must come from this library or be null; it is invalid afterwards.
void qsmc_scenario_free(struct QsmcScenario *scenario);

// # Safety
// `scenario` must come from this library and `out` be a valid pointer.
enum QsmcStatus qsmc_run(const struct QsmcScenario *scenario, struct QsmcRunLog **out);

// # Safety
// `log` must come from this library or be null.
size_t qsmc_runlog_len(const struct QsmcRunLog *log);

// # Safety
// `log` must come from this library and `out` be a valid pointer.
enum QsmcStatus qsmc_runlog_row(const struct QsmcRunLog *log, size_t index, struct QsmcRow *out);

// # Safety
// `log` must come from this library and `out` be a valid pointer.
enum QsmcStatus qsmc_runlog_metrics(const struct QsmcRunLog *log, struct QsmcMetrics *out);

// # Safety
// `log` must come from this library and `path` be a nul-terminated string.
enum QsmcStatus qsmc_runlog_write_csv(const struct QsmcRunLog *log, const char *path);

// # Safety
// `log` must come from this library or be null; it is invalid afterwards.
void qsmc_runlog_free(struct QsmcRunLog *log);

// Proposed sliding variable `s = ω_e + λ sgn₊(q_e°) q⃗_e`. `q_e` is
// normalized; `branch` may be null.
//
// # Safety
// `q_e` must point to 4 doubles, `omega_e` and `s_out` to 3.
enum QsmcStatus qsmc_sliding_variable(const double *q_e,
                                      const double *omega_e,
                                      double lambda,
                                      double *s_out,
                                      int8_t *branch);

// Runs the numerical oracle suite; `VerifyFailed` names the failing checks.
enum QsmcStatus qsmc_verify(void);

// Library version, static storage.
const char *qsmc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QSMC_H */
