/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef PARLAGEST_H
#define PARLAGEST_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum PgStatus {
  PG_STATUS_OK = 0,
  PG_STATUS_NULL_POINTER = 1,
  PG_STATUS_INVALID_UTF8 = 2,
  PG_STATUS_INVALID_ARGUMENT = 3,
  PG_STATUS_IO = 4,
  PG_STATUS_PARSE = 5,
  PG_STATUS_INVALID_DOCUMENT = 6,
  PG_STATUS_SIDECAR_REJECTED = 7,
  PG_STATUS_METADATA_MISSING = 8,
  // A lookup found nothing; not an error, no message is set.
  PG_STATUS_NOT_FOUND = 9,
  PG_STATUS_PANIC = 10,
} PgStatus;

typedef enum PgVerdict {
  PG_VERDICT_CORRECT = 0,
  PG_VERDICT_WRONG = 1,
  PG_VERDICT_UNKNOWN = 2,
} PgVerdict;

typedef enum PgStrategy {
  PG_STRATEGY_ONE_CORE_MANY_JOBS = 0,
  PG_STRATEGY_FOUR_CORE_FEW_JOBS = 1,
} PgStrategy;

typedef enum PgProvenance {
  PG_PROVENANCE_NATIVE_TEXT = 0,
  PG_PROVENANCE_OCR = 1,
} PgProvenance;

typedef enum PgScript {
  PG_SCRIPT_ANTIQUA = 0,
  PG_SCRIPT_FRAKTUR = 1,
} PgScript;

// Opaque frequency dictionary with its spelling index.
typedef struct PgDictionary PgDictionary;

// Opaque annotated document.
typedef struct PgDocument PgDocument;

// Token counts and percentages. A percentage is NaN when its denominator
// is zero.
typedef struct PgQualityReport {
  uint64_t n_skipped;
  uint64_t n_correct;
  uint64_t n_wrong;
  uint64_t n_unknown;
  double pct_right;
  double pct_wrong;
  double pct_unknown;
  double good_quality;
  double unknown_good_quality;
} PgQualityReport;

typedef struct PgWorkerBudget {
  size_t total_threads;
  size_t engine_cores_per_job;
  size_t parallel_jobs;
} PgWorkerBudget;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *pg_version(void);

// Message of the last failed call on this thread, or NULL. Every function
// returning a [`PgStatus`] resets it, so read it before the next such call.
const char *pg_last_error(void);

// # Safety
// `s` is NULL or a string returned by this library, not yet freed.
void pg_string_free(char *s);

// # Safety
// `data`/`len` are NULL/0 or a buffer returned by this library, not yet freed.
void pg_bytes_free(uint8_t *data, size_t len);

// The German frequency list compiled into the library.
//
// # Safety
// `out` must be writable.
enum PgStatus pg_dictionary_shipped(struct PgDictionary **out);

// Loads a `word frequency` file.
//
// # Safety
// `path` is a NUL-terminated string; `out` must be writable.
enum PgStatus pg_dictionary_load(const char *path,
                                 size_t max_edit_distance,
                                 size_t prefix_length,
                                 struct PgDictionary **out);

// # Safety
// `dict` is NULL or a live handle.
void pg_dictionary_free(struct PgDictionary *dict);

// Number of distinct (lowercased) words; 0 for NULL.
//
// # Safety
// `dict` is NULL or a live handle.
size_t pg_dictionary_len(const struct PgDictionary *dict);

// Best suggestion for `token`. Returns `NotFound` when nothing lies within
// the edit distance; `out_term` then stays untouched.
//
// # Safety
// `dict` is a live handle, `token` a NUL-terminated string and every out
// pointer writable.
enum PgStatus pg_dictionary_lookup(const struct PgDictionary *dict,
                                   const char *token,
                                   char **out_term,
                                   size_t *out_distance,
                                   uint64_t *out_frequency);

// # Safety
// `dict` is a live handle, `token` a NUL-terminated string, `out` writable.
enum PgStatus pg_spellcheck_token(const struct PgDictionary *dict,
                                  const char *token,
                                  enum PgVerdict *out);

// Percentages for raw counts.
//
// # Safety
// `out` must be writable.
enum PgStatus pg_quality_from_counts(uint64_t n_skipped,
                                     uint64_t n_correct,
                                     uint64_t n_wrong,
                                     uint64_t n_unknown,
                                     struct PgQualityReport *out);

// Segments `text` and scores its tokens against `dict`.
//
// # Safety
// `dict` is a live handle, `text` a NUL-terminated string, `out` writable.
enum PgStatus pg_score_text(const struct PgDictionary *dict,
                            const char *text,
                            struct PgQualityReport *out);

// # Safety
// `out` must be writable.
enum PgStatus pg_worker_budget(size_t total_threads,
                               enum PgStrategy strategy,
                               struct PgWorkerBudget *out);

// UTC midnight of the date in milliseconds since the epoch.
//
// # Safety
// `out` must be writable.
enum PgStatus pg_timestamp_ms(uint32_t day, uint32_t month, int32_t year, int64_t *out);

// Session metadata found in `text` and `filename`, as a JSON object.
//
// # Safety
// The strings are NUL-terminated; `out_json` must be writable.
enum PgStatus pg_extract_metadata_json(const char *text,
                                       const char *filename,
                                       const char *parliament,
                                       char **out_json);

// Builds a natively segmented document from raw text. Session metadata is
// attached when it can be found in the text or the id.
//
// # Safety
// The strings are NUL-terminated; `out` must be writable.
enum PgStatus pg_document_from_text(const char *document_id,
                                    const char *parliament,
                                    const char *text,
                                    enum PgProvenance provenance,
                                    enum PgScript script,
                                    struct PgDocument **out);

// Reads a plain or gzip-compressed XMI file.
//
// # Safety
// `path` is NUL-terminated; `out` must be writable.
enum PgStatus pg_document_read(const char *path, struct PgDocument **out);

// Parses XMI from memory, plain or gzip-compressed.
//
// # Safety
// `data` points to `len` readable bytes; `out` must be writable.
enum PgStatus pg_document_from_xmi(const uint8_t *data, size_t len, struct PgDocument **out);

// # Safety
// `doc` is NULL or a live handle.
void pg_document_free(struct PgDocument *doc);

// # Safety
// `doc` is a live handle; `out` must be writable.
enum PgStatus pg_document_sofa(const struct PgDocument *doc, char **out);

// # Safety
// `doc` is NULL or a live handle.
size_t pg_document_token_count(const struct PgDocument *doc);

// # Safety
// `doc` is NULL or a live handle.
size_t pg_document_sentence_count(const struct PgDocument *doc);

// Character offsets `[begin, end)` of token `index`.
//
// # Safety
// `doc` is a live handle; the out pointers must be writable.
enum PgStatus pg_document_token_span(const struct PgDocument *doc,
                                     size_t index,
                                     size_t *out_begin,
                                     size_t *out_end);

// Session metadata as JSON, or `MetadataMissing`.
//
// # Safety
// `doc` is a live handle; `out_json` must be writable.
enum PgStatus pg_document_metadata_json(const struct PgDocument *doc, char **out_json);

// Serializes to XMI; free the buffer with [`pg_bytes_free`].
//
// # Safety
// `doc` is a live handle; the out pointers must be writable.
enum PgStatus pg_document_to_xmi(const struct PgDocument *doc,
                                 bool gzip,
                                 uint8_t **out_data,
                                 size_t *out_len);

// Writes `<dir>/<document id>.xmi[.gz]` and returns the path.
//
// # Safety
// `doc` is a live handle, `dir` NUL-terminated, `out_path` writable.
enum PgStatus pg_document_write(const struct PgDocument *doc,
                                const char *dir,
                                bool gzip,
                                char **out_path);

// New document with the layers of a sidecar JSON payload attached. The
// input handle is left unchanged.
//
// # Safety
// `doc` is a live handle, `payload_json` NUL-terminated, `out` writable.
enum PgStatus pg_document_attach_sidecar(const struct PgDocument *doc,
                                         const char *payload_json,
                                         bool replace_segmentation,
                                         struct PgDocument **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARLAGEST_H */
