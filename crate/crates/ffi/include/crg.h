/* C interface to the crg sequential table-selection game solvers. */

#ifndef CRG_H
#define CRG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a C API call.
 */
typedef enum CrgStatus {
  /**
   * Success.
   */
  CRG_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CRG_STATUS_NULL_POINTER = 1,
  /**
   * An argument or game definition failed validation.
   */
  CRG_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The instance exceeds the configured state-space budget.
   */
  CRG_STATUS_BUDGET_EXCEEDED = 3,
  /**
   * The observation sequence has zero likelihood under every state.
   */
  CRG_STATUS_IMPOSSIBLE_OBSERVATION = 4,
  /**
   * The operation is not defined for this configuration.
   */
  CRG_STATUS_UNSUPPORTED = 5,
  /**
   * Internal invariant violation; indicates a bug.
   */
  CRG_STATUS_INTERNAL = 6,
} CrgStatus;

/**
 * Opaque solved-strategy handle.
 */
typedef struct CrgSolver CrgSolver;

/**
 * Opaque game definition handle.
 */
typedef struct CrgSpec CrgSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *crg_status_message(enum CrgStatus status);

/**
 * Creates the mirrored two-table game: one table of size 100 and one of
 * size `100 * r`, two equally likely states deciding which is which,
 * binary signals of quality `p`, even-split utility.
 *
 * # Safety
 * `out` must be a valid pointer. On success it receives a handle that
 * must be released with `crg_spec_free`.
 */
enum CrgStatus crg_spec_new_mirrored(uint32_t customers, double p, double r, struct CrgSpec **out);

/**
 * Creates a game from explicit matrices with the even-split utility rule.
 *
 * `sizes` is `tables x states` row-major (table-major); `prior` has one
 * entry per state; `signal_model` is `signals x states` row-major with
 * each state's column summing to 1.
 *
 * # Safety
 * All pointers must reference arrays of the stated lengths; `out` must be
 * valid and receives a handle to release with `crg_spec_free`.
 */
enum CrgStatus crg_spec_new(uint32_t customers,
                            uint32_t tables,
                            uint32_t states,
                            const double *sizes,
                            const double *prior,
                            uint32_t signals,
                            const double *signal_model,
                            struct CrgSpec **out);

/**
 * Releases a spec handle. Null is ignored.
 *
 * # Safety
 * `spec` must have come from a `crg_spec_new*` call and not yet be freed.
 */
void crg_spec_free(struct CrgSpec *spec);

/**
 * Number of customers; 0 if `spec` is null.
 *
 * # Safety
 * `spec` must be a live handle or null.
 */
uint32_t crg_spec_customers(const struct CrgSpec *spec);

/**
 * Number of tables; 0 if `spec` is null.
 *
 * # Safety
 * `spec` must be a live handle or null.
 */
uint32_t crg_spec_tables(const struct CrgSpec *spec);

/**
 * Number of states; 0 if `spec` is null.
 *
 * # Safety
 * `spec` must be a live handle or null.
 */
uint32_t crg_spec_states(const struct CrgSpec *spec);

/**
 * Number of signal values; 0 if `spec` is null.
 *
 * # Safety
 * `spec` must be a live handle or null.
 */
uint32_t crg_spec_signals(const struct CrgSpec *spec);

/**
 * Plays the known-state sequential game. `actions_out` (1-based tables)
 * and `utilities_out` each take one entry per customer; either may be
 * null to skip it.
 *
 * # Safety
 * `spec` must be a live handle; non-null out arrays must hold
 * `crg_spec_customers(spec)` entries.
 */
enum CrgStatus crg_play_perfect(const struct CrgSpec *spec,
                                uint32_t state,
                                uint32_t *actions_out,
                                double *utilities_out);

/**
 * Solves the noisy-signal game by backward induction and returns a
 * solver handle. `memo_budget` of 0 means the default cap.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be valid and receives a handle
 * to release with `crg_solver_free`.
 */
enum CrgStatus crg_solver_new(const struct CrgSpec *spec,
                              uint64_t memo_budget,
                              struct CrgSolver **out);

/**
 * Releases a solver handle. Null is ignored.
 *
 * # Safety
 * `solver` must have come from `crg_solver_new` and not yet be freed.
 */
void crg_solver_free(struct CrgSolver *solver);

/**
 * Best response for a customer: `position` is their 1-based turn,
 * `observed` holds per-table occupancies (one per table), `revealed` the
 * `position - 1` earlier customers' signals, `own_signal` their own.
 * Writes the chosen 1-based table to `action_out`.
 *
 * # Safety
 * `solver` must be a live handle; `observed` holds one entry per table;
 * `revealed` holds `position - 1` entries (may be null when empty);
 * `action_out` must be valid.
 */
enum CrgStatus crg_best_response(const struct CrgSolver *solver,
                                 uint32_t position,
                                 const uint32_t *observed,
                                 const uint32_t *revealed,
                                 uint32_t own_signal,
                                 uint32_t *action_out);

/**
 * Expected final utility of committing to `table` (1-based) in the given
 * context.
 *
 * # Safety
 * As for `crg_best_response`; `value_out` must be valid.
 */
enum CrgStatus crg_expected_utility(const struct CrgSolver *solver,
                                    uint32_t position,
                                    const uint32_t *observed,
                                    const uint32_t *revealed,
                                    uint32_t own_signal,
                                    uint32_t table,
                                    double *value_out);

/**
 * Plays one full game for a known state and signal profile. `signals`
 * holds one 1-based entry per customer; `actions_out` and
 * `utilities_out` each take one entry per customer (either may be null).
 *
 * # Safety
 * `solver` must be a live handle; `signals` holds one entry per
 * customer; non-null out arrays hold one entry per customer.
 */
enum CrgStatus crg_simulate(const struct CrgSolver *solver,
                            uint32_t state,
                            const uint32_t *signals,
                            uint32_t *actions_out,
                            double *utilities_out);

/**
 * Exact per-customer expected utilities under rational play, one entry
 * per customer.
 *
 * # Safety
 * `spec` must be a live handle; `means_out` must hold one entry per
 * customer.
 */
enum CrgStatus crg_exact_expectation(const struct CrgSpec *spec, double *means_out);

/**
 * Seeded Monte Carlo means (and optionally standard errors), one entry
 * per customer. Bit-reproducible for a given seed.
 *
 * # Safety
 * `spec` must be a live handle; `means_out` must hold one entry per
 * customer; `stderrs_out` may be null or hold one entry per customer.
 */
enum CrgStatus crg_run_trials(const struct CrgSpec *spec,
                              uint64_t trials,
                              uint64_t seed,
                              double *means_out,
                              double *stderrs_out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CRG_H */
