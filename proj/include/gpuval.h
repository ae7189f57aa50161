/* C interface to the trace validation library. All entry points return a
 * status code; 0 is success. On failure gv_last_error() holds a thread-local
 * message until the next call on that thread. Objects returned through
 * out-parameters are owned by the caller and released with the matching
 * _free function; strings with gv_string_free. */

#ifndef GPUVAL_H
#define GPUVAL_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gv_status {
  GV_OK = 0,
  GV_ERR_IO = 1,
  GV_ERR_PARSE = 2,
  GV_ERR_VERSION_MISMATCH = 3,
  GV_ERR_UNKNOWN_EVENT = 4,
  GV_ERR_MISSING_INSTANCE = 5,
  GV_ERR_UNKNOWN_CONFIGURATION = 6,
  GV_ERR_DUPLICATE_CONFIGURATION = 7,
  GV_ERR_MARKER_EVENT_ABSENT = 8,
  GV_ERR_UNPAIRED_MARKER = 9,
  GV_ERR_SEGMENTATION_FAILURE = 10,
  GV_ERR_AMBIGUOUS_AMPLITUDE = 11,
  GV_ERR_UNKNOWN_AMPLITUDE = 12,
  GV_ERR_DEGENERATE_INPUT = 13,
  GV_ERR_INCONSISTENT_KERNEL_SEQUENCE = 14,
  GV_ERR_NO_REFERENCE_FOR_CONFIG = 15,
  GV_ERR_INVALID_TARGET = 16,
  GV_ERR_MISSING_MEMORY_EVENTS = 17,
  GV_ERR_CACHE_CAPACITY_EXCEEDED = 18,
  GV_ERR_GOLDEN_UNAVAILABLE = 19,
  GV_ERR_INVALID_ARGUMENT = 20,
  GV_ERR_INTERNAL = 127
} gv_status;

typedef struct gv_config gv_config; /* one run description (JSON document) */
typedef struct gv_trace gv_trace;
typedef struct gv_golden gv_golden;

const char* gv_version(void);

/* Message for the most recent failing call on this thread; empty string when
 * the last call succeeded. The pointer stays valid until the next library
 * call on the same thread. */
const char* gv_last_error(void);

void gv_string_free(char* s);

/* --- run configuration ---------------------------------------------- */

gv_status gv_config_create(gv_config** out);
/* Defaults overlaid with the JSON file at path (merge semantics). */
gv_status gv_config_load(const char* path, gv_config** out);
/* "dotted.path=value"; value is parsed as JSON, else taken as a string. */
gv_status gv_config_set(gv_config* config, const char* assignment);
gv_status gv_config_dump(const gv_config* config, char** out_json);
void gv_config_free(gv_config* config);

/* --- traces and models ---------------------------------------------- */

gv_status gv_trace_read(const char* path, gv_trace** out);
gv_status gv_trace_write(const gv_trace* trace, const char* path);
void gv_trace_free(gv_trace* trace);

gv_status gv_golden_read(const char* path, gv_golden** out);
void gv_golden_free(gv_golden* model);

/* Verdict for one trace against one model, as a JSON document. */
gv_status gv_validate(const gv_golden* model, const gv_trace* trace,
                      char** out_json);

/* --- batch drivers ---------------------------------------------------
 * Each writes its report files under out_dir (created if needed) and
 * returns the produced paths joined with '\n'. */

gv_status gv_run_build_golden(const gv_config* config, const char* out_dir,
                              char** out_paths);
gv_status gv_run_campaign(const gv_config* config, const char* out_dir,
                          char** out_paths);
gv_status gv_run_noise_study(const gv_config* config, const char* out_dir,
                             char** out_paths);
gv_status gv_run_hwsim(const gv_config* config, const char* out_dir,
                       char** out_paths);

/* File-path convenience wrapper over gv_golden_read + gv_trace_read +
 * gv_validate. */
gv_status gv_validate_files(const char* golden_path, const char* trace_path,
                            char** out_json);

/* Raw profiler CSV -> trace file, using the preset and group named by the
 * config for the event schema. */
gv_status gv_ingest_csv(const gv_config* config, const char* csv_path,
                        const char* out_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GPUVAL_H */
