#ifndef DISTCURV_H
#define DISTCURV_H

/* C interface to the distribution-curvature library.
 *
 * Conventions:
 *  - Every function that can fail returns an int status (see the enum below);
 *    0 is success.  On a nonzero status the per-thread error message is set
 *    and can be read with distcurv_last_error_message().
 *  - Report-producing calls hand back a malloc'd NUL-terminated string via
 *    the out parameter; release it with distcurv_free().  The out string is
 *    also produced when the status is DISTCURV_PROPERTY_VIOLATION (the report
 *    describes the failed property); for any other nonzero status *out is
 *    left NULL.
 *  - All functions are thread-safe; the error state is thread-local.
 */

#include <stddef.h>

#if defined(__GNUC__)
#define DISTCURV_API __attribute__((visibility("default")))
#else
#define DISTCURV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum distcurv_status {
  DISTCURV_OK = 0,
  DISTCURV_PROPERTY_VIOLATION = 1, /* an asserted or required property fails */
  DISTCURV_VALIDATION = 2,         /* bad arguments, names, or model files */
  DISTCURV_DEGENERACY = 3,         /* numeric degeneracy or internal failure */
  DISTCURV_NOT_CONTACT = 4,        /* the distribution is not contact */
  DISTCURV_NO_POSITIVE_ROOT = 5,   /* pointwise solve has no positive root */
  DISTCURV_SCHEDULE_EXHAUSTED = 6, /* the D-doubling search ran out */
  DISTCURV_NOT_APPLICABLE = 7      /* no usable anisotropic stretch exists */
} distcurv_status;

/* Opaque model handle. */
typedef struct distcurv_model distcurv_model;

DISTCURV_API const char* distcurv_version(void);

/* Newline-separated catalog of builtin model names. Free with
 * distcurv_free(). Never fails. */
DISTCURV_API char* distcurv_builtin_models(void);

/* NULL on failure (error state describes why). */
DISTCURV_API distcurv_model* distcurv_open_builtin(const char* name);
DISTCURV_API distcurv_model* distcurv_open_file(const char* path);
DISTCURV_API void distcurv_close(distcurv_model* model);

/* Model name as stored in the handle; valid for the handle's lifetime. */
DISTCURV_API const char* distcurv_model_name(const distcurv_model* model);

/* Status of the most recent failing call on this thread, and its message.
 * The message pointer stays valid until the next failing call on the same
 * thread. */
DISTCURV_API int distcurv_last_error_code(void);
DISTCURV_API const char* distcurv_last_error_message(void);

/* Default worker count for grid evaluation: >0 fixes the count, 0 restores
 * auto (DISTCURV_THREADS env var, else hardware). */
DISTCURV_API void distcurv_set_threads(int threads);

DISTCURV_API void distcurv_free(char* s);

/* Curvature report of `dist` over an n1*n2*n3 grid.  `stretch` is an optional
 * expression in u1,u2,u3 applied along the adapted transversal before the
 * report (NULL for none).  `format` is "csv" or "json". */
DISTCURV_API int distcurv_curvature(const distcurv_model* model,
                                    const char* dist, int n1, int n2, int n3,
                                    const char* stretch, const char* format,
                                    char** out);

/* Assert properties: every name in `contacts` must be a contact structure,
 * every consecutive pair in `pairs` (2*n_pairs entries) a bi-contact pair.
 * Returns DISTCURV_OK when all hold, DISTCURV_PROPERTY_VIOLATION when some
 * assertion fails (the report still lands in *out).  `format` is "text" or
 * "json". */
DISTCURV_API int distcurv_check(const distcurv_model* model,
                                const char* const* contacts, size_t n_contacts,
                                const char* const* pairs, size_t n_pairs,
                                int n1, int n2, int n3, const char* format,
                                char** out);

/* Make the chosen curvature of `dist` equal to `target` (an expression in
 * u1,u2,u3).  `method` is "sectional", "sectional-bicontact", or "gaussian";
 * the bi-contact method needs `eta` naming the second structure (NULL
 * otherwise).  `emit_fields` != 0 adds the stretch field and final metric to
 * the JSON report.  `format` is "text" or "json". */
DISTCURV_API int distcurv_prescribe(const distcurv_model* model,
                                    const char* dist, const char* method,
                                    const char* eta, const char* target,
                                    int n1, int n2, int n3, double tolerance,
                                    int emit_fields, const char* format,
                                    char** out);

/* Self-check suites: "lemma31", "lemma32", "lemma33", "frame-invariance",
 * "fd".  Returns DISTCURV_OK when the max deviation is within `tol`,
 * DISTCURV_PROPERTY_VIOLATION otherwise (report still produced).  `format`
 * is "text" or "json". */
DISTCURV_API int distcurv_validate(const char* suite, int samples,
                                   unsigned long long seed, double tol,
                                   const char* format, char** out);

#ifdef __cplusplus
}
#endif

#endif /* DISTCURV_H */
