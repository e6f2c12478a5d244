/* C interface to the hkserver simulation library. */

#ifndef HKSERVER_H
#define HKSERVER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible entry point.
 */
typedef enum HkStatus {
  HkStatus_Ok = 0,
  /**
   * A required pointer argument was NULL.
   */
  HkStatus_NullPointer = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  HkStatus_Utf8 = 2,
  /**
   * Inputs are structurally invalid (bad tree, point, configuration
   * or plan).
   */
  HkStatus_InvalidArgument = 3,
  /**
   * A textual input (rational, spec, JSON) failed to parse.
   */
  HkStatus_Parse = 4,
  /**
   * A size or non-termination guard tripped before completion.
   */
  HkStatus_Guard = 5,
  /**
   * A verified invariant was violated during the run.
   */
  HkStatus_Violation = 6,
  /**
   * Operating-system I/O failure.
   */
  HkStatus_Io = 7,
  /**
   * Internal error (precision exhaustion or a caught panic).
   */
  HkStatus_Internal = 8,
} HkStatus;

typedef struct HkTree HkTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; never freed.
 */
const char *hk_version(void);

/**
 * The last error message recorded on this thread. The pointer stays
 * valid until the next failing call on the same thread; never freed.
 */
const char *hk_last_error(void);

/**
 * Releases a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must be a pointer previously returned through a `char**`
 * out-parameter of this library, or NULL.
 */
void hk_string_free(char *s);

/**
 * Releases a tree handle. NULL is a no-op.
 *
 * # Safety
 * `t` must be a handle previously returned by `hk_tree_from_*` or
 * `hk_embed_bounded_diameter`, or NULL.
 */
void hk_tree_free(struct HkTree *t);

/**
 * Parses a tree from its JSON file form
 * `{depth, nodes: [{id, parent, length: "p/q"}]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum HkStatus hk_tree_from_json(const char *json, struct HkTree **out);

/**
 * Builds a uniform tree from the compact spec
 * `depth:fanout,...:length,...` (e.g. `2:3,2:1,1/2`).
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum HkStatus hk_tree_from_hst(const char *spec, struct HkTree **out);

/**
 * Serializes a tree back to its JSON file form.
 *
 * # Safety
 * `t` must be a valid tree handle; `out` must be writable.
 */
enum HkStatus hk_tree_to_json(const struct HkTree *t, char **out);

/**
 * # Safety
 * `t` must be a valid tree handle; `out` must be writable.
 */
enum HkStatus hk_tree_depth(const struct HkTree *t, uintptr_t *out);

/**
 * # Safety
 * `t` must be a valid tree handle; `out` must be writable.
 */
enum HkStatus hk_tree_leaf_count(const struct HkTree *t, uintptr_t *out);

/**
 * Copies the leaf identifiers into `buf` (capacity `cap` elements)
 * and stores the leaf count in `written`. Fails with
 * `HK_STATUS_INVALID_ARGUMENT` when `cap` is too small; query the
 * needed capacity with `hk_tree_leaf_count`.
 *
 * # Safety
 * `t` must be a valid tree handle; `buf` must hold `cap` writable
 * elements; `written` must be writable.
 */
enum HkStatus hk_tree_leaves(const struct HkTree *t,
                             uintptr_t *buf,
                             uintptr_t cap,
                             uintptr_t *written);

/**
 * Exact optimal offline cost of serving `requests` starting from the
 * leaf configuration `start`, as a `"p/q"` string.
 *
 * # Safety
 * Pointer arguments must satisfy the conventions above.
 */
enum HkStatus hk_opt_cost(const struct HkTree *t,
                          const uintptr_t *start,
                          uintptr_t n_start,
                          const uintptr_t *requests,
                          uintptr_t n_requests,
                          char **cost_out);

/**
 * Runs the named online algorithm (`"dc"`, `"aggressive"` or
 * `"wfa"`) over the request trace and returns its exact total cost
 * as a `"p/q"` string.
 *
 * # Safety
 * Pointer arguments must satisfy the conventions above.
 */
enum HkStatus hk_simulate(const struct HkTree *t,
                          const char *algorithm,
                          const uintptr_t *start,
                          uintptr_t n_start,
                          const uintptr_t *requests,
                          uintptr_t n_requests,
                          char **cost_out);

/**
 * Runs a lower-bound experiment: the named adversary (`"dc"`,
 * `"general"` or `"wfa"`) against the named algorithm with `h`
 * offline and `k` online servers for the given number of phases.
 * `eps` (and the optional `eps_prime`, NULL for the default `eps²`)
 * are `"p/q"` strings. Returns the summary as a JSON object with
 * exact `"p/q"` fields (`alg_cost`, `adv_cost`, `opt_cost`,
 * `opt_exact`, `ratio`, `phases`, `requests`).
 *
 * # Safety
 * Pointer arguments must satisfy the conventions above.
 */
enum HkStatus hk_lower_bound(const char *algorithm,
                             const char *adversary,
                             uintptr_t h,
                             uintptr_t k,
                             const char *eps,
                             const char *eps_prime,
                             uintptr_t phases,
                             char **summary_out);

/**
 * Verifies the potential-function accounting on the given request
 * trace with `h` adversary and `k` online servers: the adversary
 * follows an optimal offline schedule and every elementary step of
 * the online algorithm is checked. `ok_out` receives 1 when every
 * row passed, 0 otherwise; `csv_out` receives the per-row transcript
 * (`step,phase,case,cost,dphi,slack,ok,notes`).
 *
 * # Safety
 * Pointer arguments must satisfy the conventions above.
 */
enum HkStatus hk_verify_potential(const struct HkTree *t,
                                  uintptr_t h,
                                  uintptr_t k,
                                  const uintptr_t *requests,
                                  uintptr_t n_requests,
                                  int *ok_out,
                                  char **csv_out);

/**
 * Embeds a bounded-diameter tree into a uniform-leaf-depth tree with
 * distance distortion at most `eps` (a `"p/q"` string) times the
 * shortest edge. Returns the new tree and, in `leaf_map_json`, a
 * JSON array mapping every original node id to its image.
 *
 * # Safety
 * Pointer arguments must satisfy the conventions above.
 */
enum HkStatus hk_embed_bounded_diameter(const struct HkTree *t,
                                        const char *eps,
                                        struct HkTree **tree_out,
                                        char **leaf_map_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HKSERVER_H */
