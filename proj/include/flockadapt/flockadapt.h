/* flockadapt C interface.
 *
 * All objects are opaque and owned by the caller once returned; release them
 * with the matching *_free function. Strings returned through `char**` are
 * heap copies released with fa_string_free. Every call that can fail returns
 * an fa_status; the message of the most recent failure on the calling thread
 * is available from fa_last_error().
 */
#ifndef FLOCKADAPT_H
#define FLOCKADAPT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(FLOCKADAPT_BUILDING)
#define FA_API __declspec(dllexport)
#else
#define FA_API __declspec(dllimport)
#endif
#else
#define FA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fa_status {
    FA_OK = 0,
    FA_ERR_IO = 1,
    FA_ERR_VALIDATION = 2,
    FA_ERR_NUMERIC = 3,
    FA_ERR_PARSE = 5,
    FA_ERR_TOPOLOGY = 6,
    FA_ERR_DIMENSION = 7,
    FA_ERR_ARGUMENT = 8,
    FA_ERR_INTERNAL = 9
} fa_status;

typedef struct fa_scenario fa_scenario;
typedef struct fa_trace fa_trace;
typedef struct fa_prediction fa_prediction;
typedef struct fa_audit_report fa_audit_report;

FA_API const char* fa_version(void);
FA_API const char* fa_last_error(void);
FA_API const char* fa_status_name(fa_status status);
FA_API void fa_string_free(char* text);

/* Scenarios */
FA_API fa_status fa_scenario_load(const char* path, fa_scenario** out);
FA_API fa_status fa_scenario_parse(const char* text, const char* source_name, fa_scenario** out);
FA_API fa_status fa_scenario_canonical(fa_scenario** out);
FA_API void fa_scenario_free(fa_scenario* scenario);

/* Overrides are validated; on failure the scenario is left unchanged. */
FA_API fa_status fa_scenario_set_dt(fa_scenario* scenario, double dt_s);
FA_API fa_status fa_scenario_set_duration(fa_scenario* scenario, double duration_s);
FA_API fa_status fa_scenario_set_seed(fa_scenario* scenario, uint64_t seed);

FA_API const char* fa_scenario_name(const fa_scenario* scenario);
FA_API size_t fa_scenario_agent_count(const fa_scenario* scenario);
FA_API size_t fa_scenario_notice_count(const fa_scenario* scenario);
FA_API const char* fa_scenario_notice(const fa_scenario* scenario, size_t index);
FA_API fa_status fa_scenario_write(const fa_scenario* scenario, char** text);

/* Simulation */
FA_API fa_status fa_run(const fa_scenario* scenario, fa_trace** out);
FA_API void fa_trace_free(fa_trace* trace);
FA_API fa_status fa_trace_load_csv(const char* path, fa_trace** out);
FA_API fa_status fa_trace_write_csv(const fa_trace* trace, const char* path);
FA_API fa_status fa_trace_csv_text(const fa_trace* trace, char** text);
FA_API fa_status fa_trace_summary(const fa_trace* trace, char** text);
FA_API size_t fa_trace_sample_count(const fa_trace* trace);
/* Final recorded linear speed of an agent; FA_ERR_ARGUMENT when the agent
 * is unknown or no longer present. */
FA_API fa_status fa_trace_final_speed(const fa_trace* trace, int64_t agent_id, double* speed);
FA_API fa_status fa_trace_plot(const fa_trace* trace, const char* directory);

/* Steady state of the formation left after the scenario's loss events. */
FA_API fa_status fa_predict(const fa_scenario* scenario, fa_prediction** out);
FA_API void fa_prediction_free(fa_prediction* prediction);
FA_API fa_status fa_prediction_text(const fa_prediction* prediction, char** text);
/* Sets *has_delta to 0 when the prediction came from the numeric solver. */
FA_API fa_status fa_prediction_delta(const fa_prediction* prediction, double* delta, int* has_delta);
FA_API fa_status fa_prediction_speed_offset(const fa_prediction* prediction, double* offset);

/* Audit; a failed audit is still FA_OK, query fa_audit_passed. */
FA_API fa_status fa_audit(const fa_trace* trace, fa_audit_report** out);
FA_API void fa_audit_free(fa_audit_report* report);
FA_API int fa_audit_passed(const fa_audit_report* report);
FA_API fa_status fa_audit_text(const fa_audit_report* report, char** text);

#ifdef __cplusplus
}
#endif

#endif
