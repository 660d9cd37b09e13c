/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef AQV_H
#define AQV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of a fallible call.
 */
typedef enum AqvStatus {
  AQV_STATUS_OK = 0,
  AQV_STATUS_NULL_POINTER = 1,
  AQV_STATUS_INVALID_UTF8 = 2,
  AQV_STATUS_PARSE = 3,
  AQV_STATUS_INVALID_ARGUMENT = 4,
  AQV_STATUS_ENGINE = 5,
  AQV_STATUS_TESTER = 6,
  AQV_STATUS_PANIC = 7,
} AqvStatus;

typedef enum AqvStrategy {
  AQV_STRATEGY_ADAPTIVE = 0,
  AQV_STRATEGY_UNIFORM = 1,
} AqvStrategy;

typedef enum AqvVerdict {
  AQV_VERDICT_ALL_SATISFIED = 0,
  AQV_VERDICT_VIOLATED = 1,
  AQV_VERDICT_BUDGET_EXHAUSTED = 2,
} AqvVerdict;

/*
 A parsed and validated model.
 */
typedef struct AqvModel AqvModel;

/*
 The result of one verification run.
 */
typedef struct AqvOutcome AqvOutcome;

/*
 A parsed requirement list.
 */
typedef struct AqvRequirements AqvRequirements;

/*
 Run settings. Start from [`aqv_config_default`].
 */
typedef struct AqvConfig {
  double alpha;
  double budget;
  double round_budget;
  double epsilon1;
  double epsilon2;
  size_t max_boxes;
  uint32_t max_bounded_k;
  enum AqvStrategy strategy;
} AqvConfig;

/*
 Runs `n` tests of component `component` (0-based) in round `round` and
 writes one count per edge of the component, in the order reported by
 [`aqv_model_edge`], into `counts` (`len` entries, zeroed on entry).
 Returns 0 on success; any other value aborts the run.
 */
typedef int32_t (*AqvTestCallback)(void *ctx,
                                   size_t component,
                                   uint64_t n,
                                   uint32_t round,
                                   uint64_t *counts,
                                   size_t len);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the last failure on this thread; empty if none. The
 pointer stays valid until the next failing call on this thread.
 */
const char *aqv_last_error(void);

/*
 Defaults for the given budgets: alpha 0.95, epsilon1 0.15, epsilon2 1e-6,
 4096 boxes, bounded horizon 100, adaptive strategy.
 */
struct AqvConfig aqv_config_default(double budget, double round_budget);

/*
 Parses a model file's text.

 # Safety
 `src` must be a NUL-terminated string and `out` a writable pointer.
 */
enum AqvStatus aqv_model_parse(const char *src, struct AqvModel **out);

/*
 # Safety
 `model` must come from [`aqv_model_parse`] and not be used afterwards.
 */
void aqv_model_free(struct AqvModel *model);

/*
 Number of components; 0 for a null handle.

 # Safety
 `model` must be null or a live handle.
 */
size_t aqv_model_component_count(const struct AqvModel *model);

/*
 Name of component `component`, or null when out of range. Owned by the
 model.

 # Safety
 `model` must be null or a live handle.
 */
const char *aqv_model_component_name(const struct AqvModel *model, size_t component);

/*
 Number of edges leaving the states of component `component`.

 # Safety
 `model` must be null or a live handle.
 */
size_t aqv_model_edge_count(const struct AqvModel *model, size_t component);

/*
 Source and target state names of edge `edge` of component `component`.
 The strings are owned by the model.

 # Safety
 `model` must be a live handle; `from` and `to` writable pointers.
 */
enum AqvStatus aqv_model_edge(const struct AqvModel *model,
                              size_t component,
                              size_t edge,
                              const char **from,
                              const char **to);

/*
 Parses a requirement list.

 # Safety
 `src` must be a NUL-terminated string and `out` a writable pointer.
 */
enum AqvStatus aqv_requirements_parse(const char *src, struct AqvRequirements **out);

/*
 # Safety
 `reqs` must come from [`aqv_requirements_parse`] and not be used
 afterwards.
 */
void aqv_requirements_free(struct AqvRequirements *reqs);

/*
 Number of requirements; 0 for a null handle.

 # Safety
 `reqs` must be null or a live handle.
 */
size_t aqv_requirements_count(const struct AqvRequirements *reqs);

/*
 Exact value of every requirement's property at a valuation given as
 `name = value` lines. `values` must hold `len` entries, one per
 requirement.

 # Safety
 Handles must be live, `valuation` NUL-terminated and `values` writable
 for `len` doubles.
 */
enum AqvStatus aqv_evaluate(const struct AqvModel *model,
                            const struct AqvRequirements *reqs,
                            const char *valuation,
                            double *values,
                            size_t len);

/*
 Verifies with simulated tests drawn from `truth` (`name = value` lines).

 # Safety
 Handles must be live, `config` readable, `truth` NUL-terminated and
 `out` writable.
 */
enum AqvStatus aqv_verify_simulated(const struct AqvModel *model,
                                    const struct AqvRequirements *reqs,
                                    const struct AqvConfig *config,
                                    const char *truth,
                                    uint64_t seed,
                                    struct AqvOutcome **out);

/*
 Verifies with tests run by `callback`; `ctx` is passed through.

 # Safety
 Handles must be live, `config` readable and `out` writable; `callback`
 must honour the [`AqvTestCallback`] contract.
 */
enum AqvStatus aqv_verify_with_callback(const struct AqvModel *model,
                                        const struct AqvRequirements *reqs,
                                        const struct AqvConfig *config,
                                        AqvTestCallback callback,
                                        void *ctx,
                                        struct AqvOutcome **out);

/*
 # Safety
 `outcome` must be a live handle.
 */
enum AqvVerdict aqv_outcome_verdict(const struct AqvOutcome *outcome);

/*
 # Safety
 `outcome` must be a live handle.
 */
double aqv_outcome_total_cost(const struct AqvOutcome *outcome);

/*
 Rounds in which tests were run.

 # Safety
 `outcome` must be a live handle.
 */
uint32_t aqv_outcome_testing_rounds(const struct AqvOutcome *outcome);

/*
 The verdict as JSON, owned by the outcome.

 # Safety
 `outcome` must be a live handle.
 */
const char *aqv_outcome_json(const struct AqvOutcome *outcome);

/*
 # Safety
 `outcome` must come from an `aqv_verify_*` call and not be used
 afterwards.
 */
void aqv_outcome_free(struct AqvOutcome *outcome);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AQV_H */
