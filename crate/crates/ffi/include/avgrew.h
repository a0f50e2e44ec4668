#ifndef AVGREW_H
#define AVGREW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum AvgrewStatus {
  AVGREW_STATUS_OK = 0,
  AVGREW_STATUS_NULL_POINTER = 1,
  AVGREW_STATUS_INVALID_ARGUMENT = 2,
  AVGREW_STATUS_SOLVER_ERROR = 3,
  AVGREW_STATUS_BUFFER_TOO_SMALL = 4,
  AVGREW_STATUS_PANIC = 5,
} AvgrewStatus;

/**
 * Opaque Differential Q-learning state with a constant step size.
 */
typedef struct AvgrewDiffQ AvgrewDiffQ;

/**
 * Opaque tabular MDP.
 */
typedef struct AvgrewMdp AvgrewMdp;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *avgrew_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void avgrew_string_free(char *s);

/**
 * Builds a named environment: `access_control`, `two_loop`,
 * `two_loop_big`, `two_loop_rare` or `two_state_transient`.
 *
 * # Safety
 * `env_name` must be a NUL-terminated string; `out` a writable pointer.
 */
enum AvgrewStatus avgrew_mdp_new(const char *env_name, struct AvgrewMdp **out);

/**
 * # Safety
 * `mdp` must come from [`avgrew_mdp_new`] and not have been freed; null is
 * ignored.
 */
void avgrew_mdp_free(struct AvgrewMdp *mdp);

/**
 * Number of states, or 0 for null.
 *
 * # Safety
 * `mdp` must be null or a live handle.
 */
uintptr_t avgrew_mdp_n_states(const struct AvgrewMdp *mdp);

/**
 * Number of state–action pairs, or 0 for null.
 *
 * # Safety
 * `mdp` must be null or a live handle.
 */
uintptr_t avgrew_mdp_n_pairs(const struct AvgrewMdp *mdp);

/**
 * Actions available in `state`, or 0 for null or an invalid state.
 *
 * # Safety
 * `mdp` must be null or a live handle.
 */
uintptr_t avgrew_mdp_n_actions(const struct AvgrewMdp *mdp, uintptr_t state);

/**
 * Optimal reward rate by relative value iteration to tolerance `tol`.
 *
 * # Safety
 * `mdp` must be a live handle; `out_rate` writable.
 */
enum AvgrewStatus avgrew_solve_optimal(const struct AvgrewMdp *mdp, double tol, double *out_rate);

/**
 * Reward rate of a policy given by spec (`uniform`, `always:K`,
 * `probs:P0,P1,..`, `optimal`, `eps_optimal:E`).
 *
 * # Safety
 * `mdp` must be a live handle, `policy` a NUL-terminated string and
 * `out_rate` writable.
 */
enum AvgrewStatus avgrew_policy_reward_rate(const struct AvgrewMdp *mdp,
                                            const char *policy,
                                            double *out_rate);

/**
 * Stationary distribution and centered differential values of a policy.
 * `d_out` and `v_out` must each hold `len` ≥ number of states doubles;
 * either may be null to skip it.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum AvgrewStatus avgrew_differential_values(const struct AvgrewMdp *mdp,
                                             const char *policy,
                                             double *d_out,
                                             double *v_out,
                                             uintptr_t len);

/**
 * New learner shaped like `mdp`, zero-initialized.
 *
 * # Safety
 * `mdp` must be a live handle; `out` writable.
 */
enum AvgrewStatus avgrew_diffq_new(const struct AvgrewMdp *mdp,
                                   double alpha,
                                   double eta,
                                   struct AvgrewDiffQ **out);

/**
 * # Safety
 * `q` must come from [`avgrew_diffq_new`] and not have been freed; null is
 * ignored.
 */
void avgrew_diffq_free(struct AvgrewDiffQ *q);

/**
 * One update from a transition. `delta_out` may be null.
 *
 * # Safety
 * `q` must be a live handle.
 */
enum AvgrewStatus avgrew_diffq_step(struct AvgrewDiffQ *q,
                                    uintptr_t state,
                                    uintptr_t action,
                                    double reward,
                                    uintptr_t next_state,
                                    double *delta_out);

/**
 * Reward-rate estimate, or NaN for null.
 *
 * # Safety
 * `q` must be null or a live handle.
 */
double avgrew_diffq_rbar(const struct AvgrewDiffQ *q);

/**
 * Copies the action-value table, flattened state-major, into `out`.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum AvgrewStatus avgrew_diffq_values(const struct AvgrewDiffQ *q, double *out, uintptr_t len);

/**
 * Runs an experiment from a JSON configuration and returns the run log
 * as JSON through `out_json` (free with [`avgrew_string_free`]).
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out_json` writable.
 */
enum AvgrewStatus avgrew_run_experiment_json(const char *config_json, char **out_json);

/**
 * Exact solve report as JSON. `target` is a policy spec or `optimal`.
 *
 * # Safety
 * Strings must be NUL-terminated; `out_json` writable.
 */
enum AvgrewStatus avgrew_solve_json(const char *env_name, const char *target, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AVGREW_H */
