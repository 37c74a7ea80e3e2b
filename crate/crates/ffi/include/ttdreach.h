#ifndef TTDREACH_H
#define TTDREACH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TtdrStatus {
  TtdrStatus_Ok = 0,
  TtdrStatus_NullPointer = 1,
  TtdrStatus_InvalidUtf8 = 2,
  TtdrStatus_Parse = 3,
  TtdrStatus_Model = 4,
  /**
   * The two engines gave different answers. This is a bug.
   */
  TtdrStatus_Disagreement = 5,
  TtdrStatus_Panic = 6,
} TtdrStatus;

typedef enum TtdrEngine {
  TtdrEngine_Pathwise = 0,
  TtdrEngine_Bws = 1,
  TtdrEngine_Both = 2,
} TtdrEngine;

typedef enum TtdrResult {
  TtdrResult_Reachable = 0,
  TtdrResult_Unreachable = 1,
  TtdrResult_Unknown = 2,
} TtdrResult;

/**
 * A parsed diagram.
 */
typedef struct TtdrDiagram TtdrDiagram;

/**
 * The outcome of a check.
 */
typedef struct TtdrVerdict TtdrVerdict;

typedef struct TtdrStats {
  size_t paths;
  size_t loopfree;
  size_t simple;
  size_t spaghetti;
  size_t solver_calls;
  size_t bws_calls;
  uint64_t time_ms;
} TtdrStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ttdr_last_error_message(void);

/**
 * Parses a NUL-terminated diagram description into `*out`.
 *
 * # Safety
 * `text` must be a valid C string and `out` a valid pointer.
 */
enum TtdrStatus ttdr_parse(const char *text, struct TtdrDiagram **out);

/**
 * # Safety
 * `d` must come from [`ttdr_parse`] and not be freed twice. NULL is ignored.
 */
void ttdr_diagram_free(struct TtdrDiagram *d);

/**
 * Runs the checker. `max_paths` of 0 means unbounded.
 *
 * # Safety
 * `d` must be a live diagram handle and `out` a valid pointer.
 */
enum TtdrStatus ttdr_check(const struct TtdrDiagram *d,
                           enum TtdrEngine engine,
                           size_t max_paths,
                           struct TtdrVerdict **out);

/**
 * # Safety
 * `v` must be a live verdict handle.
 */
enum TtdrResult ttdr_verdict_result(const struct TtdrVerdict *v);

/**
 * # Safety
 * `v` must be a live verdict handle and `out` a valid pointer.
 */
enum TtdrStatus ttdr_verdict_stats(const struct TtdrVerdict *v, struct TtdrStats *out);

/**
 * The human-readable verdict block. Free it with [`ttdr_string_free`].
 * Returns NULL on a NULL handle.
 *
 * # Safety
 * `v` must be a live verdict handle or NULL.
 */
char *ttdr_verdict_render(const struct TtdrVerdict *v);

/**
 * # Safety
 * `s` must come from this library. NULL is ignored.
 */
void ttdr_string_free(char *s);

/**
 * # Safety
 * `v` must come from [`ttdr_check`] and not be freed twice. NULL is ignored.
 */
void ttdr_verdict_free(struct TtdrVerdict *v);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TTDREACH_H */
