#ifndef DIRACSIM_H
#define DIRACSIM_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DsStatus {
  DS_STATUS_OK = 0,
  DS_STATUS_NULL_POINTER = 1,
  DS_STATUS_INVALID_UTF8 = 2,
  DS_STATUS_CONFIG = 3,
  DS_STATUS_INVALID_PARAMETER = 4,
  DS_STATUS_NUMERICAL = 5,
  DS_STATUS_IO = 6,
  DS_STATUS_UNKNOWN_SCENARIO = 7,
  DS_STATUS_NOT_FOUND = 8,
  DS_STATUS_PANIC = 9,
} DsStatus;

// Opaque scenario configuration.
typedef struct DsConfig DsConfig;

// Opaque scenario report.
typedef struct DsReport DsReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *ds_last_error(void);

// Library version as a static string.
const char *ds_version(void);

// Default configuration.
struct DsConfig *ds_config_default(void);

// Parse `key = value` config text.
//
// # Safety
// `config_text` must be a NUL-terminated string and `out` a valid pointer.
enum DsStatus ds_config_parse(const char *config_text, struct DsConfig **out);

// Load a config file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum DsStatus ds_config_load(const char *path, struct DsConfig **out);

// Override the seed.
//
// # Safety
// `config` must come from this library and not yet be freed.
enum DsStatus ds_config_set_seed(struct DsConfig *config, uint64_t seed);

// Override the backend: "fock", "gaussian" or "both".
//
// # Safety
// `config` must come from this library; `backend` must be NUL-terminated.
enum DsStatus ds_config_set_backend(struct DsConfig *config, const char *backend);

// Canonical text of the config. Release with `ds_string_free`.
//
// # Safety
// `config` must come from this library and not yet be freed.
char *ds_config_to_text(const struct DsConfig *config);

// # Safety
// `config` must come from this library, or be null.
void ds_config_free(struct DsConfig *config);

// Run a named scenario: baseline, gauge-heisenberg, gauge-schrodinger,
// energy-heisenberg or equivalence.
//
// # Safety
// `config` must come from this library, `scenario` must be NUL-terminated
// and `out` a valid pointer.
enum DsStatus ds_run(const struct DsConfig *config, const char *scenario, struct DsReport **out);

// Whether every check in the report passed.
//
// # Safety
// `report` must come from this library and `passed` be a valid pointer.
enum DsStatus ds_report_passed(const struct DsReport *report, bool *passed);

// Look up a named metric.
//
// # Safety
// `report` must come from this library, `name` must be NUL-terminated and
// `value` a valid pointer.
enum DsStatus ds_report_metric(const struct DsReport *report, const char *name, double *value);

// Report as JSON. Release with `ds_string_free`.
//
// # Safety
// `report` must come from this library and not yet be freed.
char *ds_report_json(const struct DsReport *report);

// Series table as CSV. Release with `ds_string_free`.
//
// # Safety
// `report` must come from this library and not yet be freed.
char *ds_report_csv(const struct DsReport *report);

// Write `<scenario>_series.csv` and `<scenario>_report.json` into `dir`.
//
// # Safety
// `report` must come from this library; `dir` must be NUL-terminated.
enum DsStatus ds_report_write(const struct DsReport *report, const char *dir);

// # Safety
// `report` must come from this library, or be null.
void ds_report_free(struct DsReport *report);

// # Safety
// `s` must be a string returned by this library, or null.
void ds_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIRACSIM_H */
