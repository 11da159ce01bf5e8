#ifndef ONTODRAFT_H
#define ONTODRAFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum OgStatus {
  OG_STATUS_OK = 0,
  OG_STATUS_NULL_POINTER = 1,
  OG_STATUS_INVALID_UTF8 = 2,
  OG_STATUS_PARSE_ERROR = 3,
  OG_STATUS_CASE_ERROR = 4,
  OG_STATUS_MISSING_GOLD = 5,
  OG_STATUS_EVAL_ERROR = 6,
  OG_STATUS_KAPPA_ERROR = 7,
  OG_STATUS_PANIC = 99,
} OgStatus;

/*
 A loaded evaluation case.
 */
typedef struct OgCase OgCase;

/*
 A parsed ontology.
 */
typedef struct OgOntology OgOntology;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread. The pointer stays valid
 until the next call on the same thread.
 */
const char *og_last_error(void);

/*
 Library version as a static string.
 */
const char *og_version(void);

/*
 # Safety
 `s` must be null or a string returned by this library.
 */
void og_string_free(char *s);

/*
 Parses Turtle text into a new ontology handle.

 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum OgStatus og_ontology_parse(const char *text, struct OgOntology **out);

/*
 # Safety
 `o` must be null or a handle from this library, not yet freed.
 */
void og_ontology_free(struct OgOntology *o);

/*
 Number of triples, or 0 for a null handle.

 # Safety
 `o` must be null or a live handle.
 */
uintptr_t og_ontology_triple_count(const struct OgOntology *o);

/*
 # Safety
 `o` must be a live handle; `out` must be writable.
 */
enum OgStatus og_ontology_serialize(const struct OgOntology *o, char **out);

/*
 Number of named classes, object properties and data properties.

 # Safety
 `o` must be a live handle; the count pointers must be writable.
 */
enum OgStatus og_ontology_signature_counts(const struct OgOntology *o,
                                           uintptr_t *classes,
                                           uintptr_t *object_properties,
                                           uintptr_t *data_properties);

/*
 Union of two ontologies as a new handle.

 # Safety
 `a` and `b` must be live handles; `out` must be writable.
 */
enum OgStatus og_ontology_merge(const struct OgOntology *a,
                                const struct OgOntology *b,
                                struct OgOntology **out);

/*
 Offline pitfall scan as `code,subject,explanation` CSV.

 # Safety
 `o` must be a live handle; `out` must be writable.
 */
enum OgStatus og_scan_csv(const struct OgOntology *o, char **out);

/*
 Loads a case directory.

 # Safety
 `dir` must be a NUL-terminated path; `out` must be writable.
 */
enum OgStatus og_case_load(const char *dir, struct OgCase **out);

/*
 # Safety
 `c` must be null or a handle from this library, not yet freed.
 */
void og_case_free(struct OgCase *c);

/*
 Number of CQs in the case, or 0 for a null handle.

 # Safety
 `c` must be null or a live handle.
 */
uintptr_t og_case_cq_count(const struct OgCase *c);

/*
 Evaluates `candidate` against every CQ of `case` and writes the full
 evaluation (coverage, verdicts, scores, superfluous elements, pitfalls)
 as JSON.

 # Safety
 `case` and `candidate` must be live handles; `out` must be writable.
 */
enum OgStatus og_evaluate_json(const struct OgCase *case_,
                               const struct OgOntology *candidate,
                               char **out);

/*
 Cohen's kappa between two label arrays of length `n`.

 # Safety
 `a` and `b` must point to `n` NUL-terminated strings each; `out` must
 be writable.
 */
enum OgStatus og_kappa(const char *const *a, const char *const *b, uintptr_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ONTODRAFT_H */
