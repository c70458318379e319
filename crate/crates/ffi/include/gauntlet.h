#ifndef GAUNTLET_H
#define GAUNTLET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes for fallible calls.
typedef enum {
  GAUNTLET_STATUS_OK = 0,
  // A required pointer argument was NULL.
  GAUNTLET_STATUS_NULL_ARGUMENT = 1,
  // An input string was not valid UTF-8.
  GAUNTLET_STATUS_INVALID_UTF8 = 2,
  // The file could not be read or written.
  GAUNTLET_STATUS_IO = 3,
  // The file is not a valid model (wrong magic, version or truncation).
  GAUNTLET_STATUS_FORMAT = 4,
  // The input text was empty or otherwise unscorable.
  GAUNTLET_STATUS_DEGENERATE = 5,
  GAUNTLET_STATUS_INTERNAL = 6,
} GauntletStatus;

// Opaque handle to a trained classifier.
typedef struct GauntletClassifier GauntletClassifier;

// Opaque handle to a trained n-gram language model.
typedef struct GauntletLm GauntletLm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version of the library as a static string; do not free.
const char *gauntlet_version(void);

// Message of the most recent failure on this thread, or NULL when no
// failure has been recorded. The caller frees it with
// [`gauntlet_string_free`].
char *gauntlet_last_error_message(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must be NULL or a pointer previously returned by a gauntlet
// function, not yet freed.
void gauntlet_string_free(char *s);

// Loads an n-gram model file into a new handle stored in `*out`.
//
// # Safety
// `path` must be a valid NUL-terminated string and `out` a valid pointer.
GauntletStatus gauntlet_lm_open(const char *path, GauntletLm **out);

// Releases a language-model handle. NULL is ignored.
//
// # Safety
// `lm` must be NULL or a handle from [`gauntlet_lm_open`], not yet freed.
void gauntlet_lm_free(GauntletLm *lm);

// Perplexity of `text` under the model, written to `*out`.
//
// # Safety
// `lm` must be a live handle; `text` a valid NUL-terminated string; `out`
// a valid pointer.
GauntletStatus gauntlet_lm_perplexity(const GauntletLm *lm, const char *text, double *out);

// Burstiness (variation of per-sentence perplexity) of `text`.
//
// # Safety
// Same contract as [`gauntlet_lm_perplexity`].
GauntletStatus gauntlet_lm_burstiness(const GauntletLm *lm, const char *text, double *out);

// Loads a classifier model file into a new handle stored in `*out`.
//
// # Safety
// `path` must be a valid NUL-terminated string and `out` a valid pointer.
GauntletStatus gauntlet_classifier_open(const char *path, GauntletClassifier **out);

// Releases a classifier handle. NULL is ignored.
//
// # Safety
// `clf` must be NULL or a handle from [`gauntlet_classifier_open`], not
// yet freed.
void gauntlet_classifier_free(GauntletClassifier *clf);

// P(AI-generated) for `text` under the classifier, written to `*out`.
//
// # Safety
// `clf` must be a live handle; `text` a valid NUL-terminated string; `out`
// a valid pointer.
GauntletStatus gauntlet_classifier_ai_probability(const GauntletClassifier *clf,
                                                  const char *text,
                                                  double *out);

// Inserts one space before the seed-chosen comma and returns the edited
// text as a new string (NULL on error). `*out_applied` reports whether an
// edit happened; a text without commas comes back unchanged.
//
// # Safety
// `text` must be a valid NUL-terminated string; `out_applied` may be NULL.
char *gauntlet_space_infi(const char *text, uint64_t seed, bool *out_applied);

// Deletes whitespace runs that precede `, . ; : ! ?` and returns the
// normalized text as a new string (NULL on error).
//
// # Safety
// `text` must be a valid NUL-terminated string.
char *gauntlet_normalize_defense(const char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAUNTLET_H */
