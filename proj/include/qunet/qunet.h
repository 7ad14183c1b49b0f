#ifndef QUNET_H
#define QUNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(QUNET_BUILDING_LIBRARY)
#define QUNET_API __declspec(dllexport)
#else
#define QUNET_API __declspec(dllimport)
#endif
#else
#define QUNET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qunet_status {
  QUNET_OK = 0,
  QUNET_ERR_DIMENSION_MISMATCH,
  QUNET_ERR_NOT_NORMALIZABLE,
  QUNET_ERR_DIGIT_OUT_OF_RANGE,
  QUNET_ERR_INDEX_OUT_OF_RANGE,
  QUNET_ERR_CAPACITY_EXCEEDED,
  QUNET_ERR_NON_UNITARY,
  QUNET_ERR_INCOMPLETE_PROJECTOR_FAMILY,
  QUNET_ERR_ZERO_PROBABILITY_BRANCH,
  QUNET_ERR_BAD_DIMENSION,
  QUNET_ERR_BAD_OUTCOME,
  QUNET_ERR_BAD_SENDER_INDEX,
  QUNET_ERR_BAD_RECEIVER_INDEX,
  QUNET_ERR_CONFIG_INVALID,
  QUNET_ERR_ROUND_REGRESSION,
  QUNET_ERR_TRANSCRIPT_MISMATCH,
  QUNET_ERR_ACCESS_VIOLATION,
  QUNET_ERR_BRANCH_EXPLOSION,
  QUNET_ERR_NO_CONSISTENT_CONVENTION,
  QUNET_ERR_AMBIGUOUS_CONVENTION,
  QUNET_ERR_PARSE,
  QUNET_ERR_IO,
  QUNET_ERR_NULL_ARGUMENT,
  QUNET_ERR_INTERNAL
} qunet_status;

typedef enum qunet_protocol {
  QUNET_MANY_TO_ONE = 0,
  QUNET_ONE_TO_MANY,
  QUNET_MANY_TO_MANY,
  QUNET_TWO_WAY
} qunet_protocol;

typedef struct qunet_config qunet_config;
typedef struct qunet_report qunet_report;

/* Message of the last failed call on this thread; "" after a success. */
QUNET_API const char* qunet_last_error(void);
QUNET_API const char* qunet_status_string(qunet_status status);
/* Frees strings returned through char** out-parameters. */
QUNET_API void qunet_string_free(char* s);

/* ------------------------------------------------------------ configuration */

QUNET_API qunet_status qunet_config_create(qunet_protocol protocol, qunet_config** out);
/* "many-to-one", "one-to-many", "many-to-many", "two-way" ('_' also accepted). */
QUNET_API qunet_status qunet_config_create_named(const char* protocol, qunet_config** out);
QUNET_API void qunet_config_destroy(qunet_config* config);

QUNET_API qunet_status qunet_config_set_dims(qunet_config* config, const size_t* dims, size_t count);
QUNET_API qunet_status qunet_config_set_recv_dims(qunet_config* config, const size_t* dims, size_t count);
QUNET_API qunet_status qunet_config_set_seed(qunet_config* config, uint64_t seed);
/* "enumerate", "sample" or "branch=o1,o2,...". */
QUNET_API qunet_status qunet_config_set_mode(qunet_config* config, const char* mode);
QUNET_API qunet_status qunet_config_set_max_dimension(qunet_config* config, size_t max_dimension);
/* Appends one input state; `re_im` holds `dim` interleaved (re, im) pairs. */
QUNET_API qunet_status qunet_config_add_input(qunet_config* config, const double* re_im, size_t dim);
/* Replaces the inputs with the states of a state file. */
QUNET_API qunet_status qunet_config_load_inputs(qunet_config* config, const char* path);

/* ---------------------------------------------------------------------- run */

QUNET_API qunet_status qunet_run(const qunet_config* config, qunet_report** out);
QUNET_API void qunet_report_destroy(qunet_report* report);

QUNET_API size_t qunet_report_branch_count(const qunet_report* report);
QUNET_API size_t qunet_report_measurement_count(const qunet_report* report);
QUNET_API double qunet_report_min_fidelity(const qunet_report* report);
QUNET_API double qunet_report_probability_sum(const qunet_report* report);
QUNET_API qunet_status qunet_report_branch(const qunet_report* report, size_t index, double* probability,
                                           double* fidelity);
/* Pretty-printed JSON report, newline-terminated. */
QUNET_API qunet_status qunet_report_to_json(const qunet_report* report, char** out);
/* One JSON message per line; empty in enumerate mode. */
QUNET_API qunet_status qunet_report_transcript(const qunet_report* report, char** out);

/* ------------------------------------------------------------------- checks */

/* Runs the property suite over `dims_matrix` ("2,2;2,3;3,2", NULL for the
 * default).  `summary_json` receives the per-property results; `passed` is 1
 * when every property holds.  A failing property is not an error status. */
QUNET_API qunet_status qunet_verify(const char* dims_matrix, uint64_t seed, int inject_fault, char** summary_json,
                                    int* passed);
/* Replays a JSONL transcript against `config` twice and compares the final
 * states; `passed` is 1 when they agree to 1e-12 and reach fidelity 1. */
QUNET_API qunet_status qunet_verify_replay(const qunet_config* config, const char* transcript_jsonl,
                                           char** summary_json, int* passed);
/* Log of the phase-convention search over the default cases, one line per candidate. */
QUNET_API qunet_status qunet_pin_phases(char** log);
/* All d^2 Bell states in the state file format, (m, n) lexicographic. */
QUNET_API qunet_status qunet_bell_table(size_t d, char** out);

#ifdef __cplusplus
}
#endif

#endif
