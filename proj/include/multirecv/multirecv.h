/* C interface to the multiple-receiver relational event model. All handles are
 * opaque. Functions returning mr_status record a message retrievable with
 * mr_last_error() on failure (per thread). Strings returned through char**
 * outputs are owned by the caller and released with mr_string_free(). */
#ifndef MULTIRECV_H
#define MULTIRECV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MULTIRECV_BUILDING)
#    define MR_API __declspec(dllexport)
#  else
#    define MR_API __declspec(dllimport)
#  endif
#else
#  define MR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mr_status {
  MR_OK = 0,
  MR_ERR_INVALID_ARGUMENT = 1,
  MR_ERR_CONFIG = 2,
  MR_ERR_PARSE = 3,
  MR_ERR_NUMERICAL = 4,
  MR_ERR_IO = 5,
  MR_ERR_INTERNAL = 6
} mr_status;

typedef struct mr_dataset mr_dataset;
typedef struct mr_draws mr_draws;
typedef struct mr_ppc_report mr_ppc_report;

MR_API const char* mr_version(void);
MR_API const char* mr_status_string(mr_status status);
MR_API const char* mr_last_error(void);
MR_API void mr_string_free(char* s);

/* Datasets. Actors are indexed from 0. */

/* design_json holds simulation design keys (num_actors, beta, mu_b, ...); "{}"
 * gives the defaults. truth_json, if non-null, receives the true parameters. */
MR_API mr_status mr_simulate(const char* design_json, uint64_t seed, mr_dataset** out, char** truth_json);
MR_API mr_status mr_dataset_load(const char* path, mr_dataset** out);
MR_API mr_status mr_dataset_save(const mr_dataset* ds, const char* path);
/* Builds covariates from an event log. attributes_path may be null, in which
 * case actors are the sorted labels seen in the log. info_json, if non-null,
 * receives {"actors": [...], "covariates": [...]}. */
MR_API mr_status mr_dataset_from_events(const char* events_path, const char* attributes_path,
                                        const char* covariates_json, mr_dataset** out, char** info_json);
MR_API void mr_dataset_free(mr_dataset* ds);
MR_API int mr_dataset_num_actors(const mr_dataset* ds);
MR_API int mr_dataset_num_covariates(const mr_dataset* ds);
MR_API size_t mr_dataset_num_messages(const mr_dataset* ds);
MR_API double mr_dataset_mean_receivers(const mr_dataset* ds);
/* Copies the receivers of message i into receivers[0..capacity); *count gets
 * the receiver-set size even when capacity is too small. */
MR_API mr_status mr_dataset_message(const mr_dataset* ds, size_t i, int* sender, int* receivers, size_t capacity,
                                    size_t* count);

/* Fitting. */

MR_API mr_status mr_fit(const mr_dataset* ds, const char* model_json, const char* mcmc_json, mr_draws** out);
MR_API mr_status mr_draws_save(const mr_draws* draws, const char* dir);
MR_API mr_status mr_draws_load(const char* dir, mr_draws** out);
MR_API void mr_draws_free(mr_draws* draws);
MR_API size_t mr_draws_count(const mr_draws* draws);
MR_API double mr_draws_wall_seconds(const mr_draws* draws);
/* Block "beta", "b", "sigma_b2", "sigma_c2", "U", "V" or "W", row-major with
 * draws as the slowest index. *needed receives the element count; pass a
 * null buffer to query it. */
MR_API mr_status mr_draws_block(const mr_draws* draws, const char* name, double* buffer, size_t capacity,
                                size_t* needed);
/* Acceptance rates, adapted steps and split R-hat. */
MR_API mr_status mr_draws_diagnostics_json(const mr_draws* draws, char** out);

/* Posterior predictive checks. */

MR_API mr_status mr_ppc_run(const mr_dataset* ds, const mr_draws* draws, const char* ppc_json, mr_ppc_report** out);
MR_API mr_status mr_ppc_report_json(const mr_ppc_report* report, int include_samples, char** out);
MR_API mr_status mr_ppc_report_write(const mr_ppc_report* report, const char* dir, int include_samples);
/* t3 or t4 summary: observed value, 2.5% and 97.5% replicate quantiles, ppp. */
MR_API mr_status mr_ppc_transitivity(const mr_ppc_report* report, int which, double* observed, double* lower,
                                     double* upper, double* ppp);
MR_API void mr_ppc_report_free(mr_ppc_report* report);

/* Summaries. options_json keys: raw_factors (bool), invariant_factors (bool),
 * coefficient_names (array). */
MR_API mr_status mr_summarize(const mr_draws* draws, const char* options_json, char** summary_json);
MR_API mr_status mr_summarize_write(const mr_draws* draws, const char* options_json, const char* dir);

#ifdef __cplusplus
}
#endif

#endif
