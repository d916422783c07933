#ifndef RRT_CUT_H
#define RRT_CUT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  RRT_STATUS_OK = 0,
  RRT_STATUS_INVALID_ARGUMENT = 1,
  RRT_STATUS_BUDGET_EXCEEDED = 2,
  RRT_STATUS_IO = 3,
  RRT_STATUS_NULL_POINTER = 4,
  RRT_STATUS_BUFFER_TOO_SMALL = 5,
  RRT_STATUS_INTERNAL = 6,
} RrtStatus;

typedef enum {
  RRT_RULE_FIRST = 0,
  RRT_RULE_LAST = 1,
  RRT_RULE_RANDOM = 2,
} RrtRule;

typedef enum {
  RRT_SAMPLER_AUTO = 0,
  RRT_SAMPLER_DIRECT = 1,
  RRT_SAMPLER_SPLITTING = 2,
} RrtSampler;

/**
 * A Monte Carlo experiment: configuration plus, after
 * [`rrt_experiment_run`], its cut counts.
 */
typedef struct RrtExperiment RrtExperiment;

/**
 * An exact cut-count law.
 */
typedef struct RrtPmf RrtPmf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *rrt_last_error(void);

/**
 * Library version as a static string.
 */
const char *rrt_version(void);

/**
 * New experiment with the automatic sampler and the global thread pool.
 * `rule` is an [`RrtRule`] value.
 */
RrtStatus rrt_experiment_new(uint32_t rule,
                             uint64_t n,
                             uint64_t ell,
                             uint64_t replicates,
                             uint64_t seed,
                             RrtExperiment **out);

/**
 * Worker threads, 0 for the global pool. Results do not depend on it.
 */
RrtStatus rrt_experiment_set_workers(RrtExperiment *exp, uint32_t workers);

/**
 * `sampler` is an [`RrtSampler`] value.
 */
RrtStatus rrt_experiment_set_sampler(RrtExperiment *exp, uint32_t sampler);

RrtStatus rrt_experiment_run(RrtExperiment *exp);

/**
 * Number of cut counts available, 0 before a run.
 */
RrtStatus rrt_experiment_len(const RrtExperiment *exp, uint64_t *out);

/**
 * Copies the cut counts, in replicate order, into `buf` of capacity `cap`.
 */
RrtStatus rrt_experiment_cuts(const RrtExperiment *exp, uint64_t *buf, uint64_t cap);

/**
 * Sample mean of the cut counts.
 */
RrtStatus rrt_experiment_mean(const RrtExperiment *exp, double *out);

void rrt_experiment_free(RrtExperiment *exp);

/**
 * Exact law of the cut count for `rule`, `n`, `ell`.
 */
RrtStatus rrt_pmf_new(uint32_t rule, uint64_t n, uint64_t ell, RrtPmf **out);

/**
 * One past the largest cut count with positive probability.
 */
RrtStatus rrt_pmf_len(const RrtPmf *p, uint64_t *out);

/**
 * `P(X = m)` rounded to double; 0 beyond the support.
 */
RrtStatus rrt_pmf_prob(const RrtPmf *p, uint64_t m, double *out);

/**
 * The exact law as JSON with numerators and denominators; owned by the
 * handle.
 */
RrtStatus rrt_pmf_json(const RrtPmf *p, const char **out);

void rrt_pmf_free(RrtPmf *p);

/**
 * Joint probability that the first cut removes `k` nodes of which `r` are
 * targets, for the target rule `rule`, in double precision.
 */
RrtStatus rrt_split_probability(uint32_t rule,
                                uint64_t n,
                                uint64_t ell,
                                uint64_t k,
                                uint64_t r,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RRT_CUT_H */
