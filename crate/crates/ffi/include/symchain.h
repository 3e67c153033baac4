/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef SYMCHAIN_H
#define SYMCHAIN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SymchainScheme {
  SYMCHAIN_SCHEME_CENTRAL = 0,
  SYMCHAIN_SCHEME_FORWARD = 1,
} SymchainScheme;

// Result code of every call.
typedef enum SymchainStatus {
  SYMCHAIN_STATUS_OK = 0,
  SYMCHAIN_STATUS_NULL_POINTER = 1,
  SYMCHAIN_STATUS_INVALID_UTF8 = 2,
  SYMCHAIN_STATUS_PARSE_ERROR = 3,
  SYMCHAIN_STATUS_INVALID_MODEL = 4,
  SYMCHAIN_STATUS_IO_ERROR = 5,
  SYMCHAIN_STATUS_INVALID_ARGUMENT = 6,
  SYMCHAIN_STATUS_CHAIN_ERROR = 7,
  SYMCHAIN_STATUS_ORACLE_ERROR = 8,
  SYMCHAIN_STATUS_OUT_OF_RANGE = 9,
  SYMCHAIN_STATUS_NOT_AVAILABLE = 10,
  SYMCHAIN_STATUS_PANIC = 11,
} SymchainStatus;

typedef enum SymchainTermination {
  SYMCHAIN_TERMINATION_NONSINGULAR = 0,
  SYMCHAIN_TERMINATION_EXHAUSTED = 1,
  SYMCHAIN_TERMINATION_MAX_LEVEL_REACHED = 2,
} SymchainTermination;

typedef enum SymchainTruncate {
  SYMCHAIN_TRUNCATE_FIRST_BLOCK = 0,
  SYMCHAIN_TRUNCATE_ITERATIVE = 1,
} SymchainTruncate;

// Opaque model handle.
typedef struct SymchainModel SymchainModel;

// Opaque chain report handle.
typedef struct SymchainReport SymchainReport;

// Chain options; obtain defaults from [`symchain_options_default`].
typedef struct SymchainOptions {
  uint32_t max_level;
  bool allow_truncation;
  enum SymchainTruncate truncate;
  uint64_t seed;
} SymchainOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Default options: `max_level` 12, truncation on, first-block truncation.
struct SymchainOptions symchain_options_default(void);

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next call into the library from this thread.
const char *symchain_last_error(void);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void symchain_string_free(char *s);

// Parses a model from text; `name` is used when the text has no `model`
// line and may be null.
//
// # Safety
// `text` and `name` must be null or NUL-terminated; `out` must be writable.
enum SymchainStatus symchain_model_parse(const char *text,
                                         const char *name,
                                         struct SymchainModel **out);

// Loads a model file.
//
// # Safety
// `path` must be NUL-terminated; `out` must be writable.
enum SymchainStatus symchain_model_load(const char *path, struct SymchainModel **out);

// Builds the lattice Schwinger model on `sites` points with spacing
// `spacing_num / spacing_den`.
//
// # Safety
// `out` must be writable.
enum SymchainStatus symchain_lattice_schwinger(size_t sites,
                                               int64_t spacing_num,
                                               int64_t spacing_den,
                                               enum SymchainScheme scheme,
                                               struct SymchainModel **out);

// Number of phase-space coordinates.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum SymchainStatus symchain_model_dimension(const struct SymchainModel *model, size_t *out);

// Serializes a model in the model-file format.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum SymchainStatus symchain_model_to_string(const struct SymchainModel *model, char **out);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must come from this library and not have been freed.
void symchain_model_free(struct SymchainModel *model);

// Runs the chain. `options` may be null for defaults.
//
// # Safety
// `model` must be a live handle, `options` null or valid, `out` writable.
enum SymchainStatus symchain_analyze(const struct SymchainModel *model,
                                     const struct SymchainOptions *options,
                                     struct SymchainReport **out);

// How the chain ended and at which level.
//
// # Safety
// `report` must be a live handle; `kind` and `level` writable.
enum SymchainStatus symchain_report_termination(const struct SymchainReport *report,
                                                enum SymchainTermination *kind,
                                                size_t *level);

// Number of constraints found, primaries included.
//
// # Safety
// `report` must be a live handle; `out` writable.
enum SymchainStatus symchain_report_constraint_count(const struct SymchainReport *report,
                                                     size_t *out);

// Level and normalized form of constraint `index`.
//
// # Safety
// `report` must be a live handle; `level` and `expr` writable.
enum SymchainStatus symchain_report_constraint(const struct SymchainReport *report,
                                               size_t index,
                                               size_t *level,
                                               char **expr);

// Determinant of the final matrix, as a reduced fraction string. Fails
// with `NotAvailable` unless the chain ended non-singular.
//
// # Safety
// `report` must be a live handle; `out` writable.
enum SymchainStatus symchain_report_determinant(const struct SymchainReport *report, char **out);

// The report as a JSON tree.
//
// # Safety
// `report` must be a live handle; `out` writable.
enum SymchainStatus symchain_report_to_json(const struct SymchainReport *report, char **out);

// The report as a text table.
//
// # Safety
// `report` must be a live handle; `out` writable.
enum SymchainStatus symchain_report_to_text(const struct SymchainReport *report, char **out);

// Releases a report. Null is ignored.
//
// # Safety
// `report` must come from this library and not have been freed.
void symchain_report_free(struct SymchainReport *report);

// Runs the chain and the Dirac–Bergmann algorithm and compares their
// constraint spans. `json` may be null; otherwise it receives the full
// comparison report.
//
// # Safety
// `model` must be a live handle, `options` null or valid, `equal`
// writable, `json` null or writable.
enum SymchainStatus symchain_compare(const struct SymchainModel *model,
                                     const struct SymchainOptions *options,
                                     bool *equal,
                                     char **json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYMCHAIN_H */
