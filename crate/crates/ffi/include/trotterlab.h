#ifndef TROTTERLAB_H
#define TROTTERLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum tl_status {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_POINTER = 1,
  TL_STATUS_INVALID_ARGUMENT = 2,
  TL_STATUS_INVALID_CONFIG = 3,
  TL_STATUS_COMPUTE = 4,
  TL_STATUS_IO = 5,
  TL_STATUS_PANIC = 6,
} tl_status;

typedef enum tl_variant {
  TL_VARIANT_PLUS = 0,
  TL_VARIANT_MINUS = 1,
  TL_VARIANT_DIF = 2,
} tl_variant;

// An assembled conserved charge on a periodic chain.
typedef struct tl_charge tl_charge;

// Resolved experiment configuration.
typedef struct tl_config tl_config;

// Result table of a decay run.
typedef struct tl_decay tl_decay;

// One row of a decay table. Absent values are NaN.
typedef struct tl_decay_row_t {
  size_t d;
  // Index into the configured charge list.
  size_t charge_index;
  double estimate;
  double s_q;
  double exact;
} tl_decay_row_t;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next `tl_*` call on the same thread.
const char *tl_last_error(void);

// Library version as a static NUL-terminated string.
const char *tl_version(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string returned by a `tl_*` function, not yet freed.
void tl_string_free(char *s);

// Parses a JSON configuration. `json` may be null for the defaults.
//
// # Safety
// `json` must be null or NUL-terminated; `out` must be writable.
enum tl_status tl_config_from_json(const char *json, struct tl_config **out);

// # Safety
// `cfg` must be null or a handle from [`tl_config_from_json`], not yet freed.
void tl_config_free(struct tl_config *cfg);

// Hex SHA-256 of the resolved configuration; free with [`tl_string_free`].
//
// # Safety
// `cfg` must be a live handle; `out` must be writable.
enum tl_status tl_config_hash(const struct tl_config *cfg, char **out);

// Overrides the seed of a configuration.
//
// # Safety
// `cfg` must be a live handle.
enum tl_status tl_config_set_seed(struct tl_config *cfg, uint64_t seed);

// Assembles the order-`order` charge of the given variant on `n_sites` sites.
//
// # Safety
// `out` must be writable.
enum tl_status tl_charge_new(size_t order,
                             enum tl_variant variant,
                             size_t n_sites,
                             struct tl_charge **out);

// # Safety
// `q` must be null or a handle from [`tl_charge_new`], not yet freed.
void tl_charge_free(struct tl_charge *q);

// Number of Pauli terms in the charge.
//
// # Safety
// `q` must be a live handle; `out` must be writable.
enum tl_status tl_charge_num_terms(const struct tl_charge *q, size_t *out);

// The charge as a JSON document; free with [`tl_string_free`].
//
// # Safety
// `q` must be a live handle; `out` must be writable.
enum tl_status tl_charge_to_json(const struct tl_charge *q, char **out);

// Noiseless `⟨Q⟩` after `depth` Trotter steps from a product state.
// `bits` is a 0/1 string; `letters` (X/Y/Z per site) may be null for all `Z`.
//
// # Safety
// `q` must be a live handle, the strings NUL-terminated or null as stated,
// and `out` writable.
enum tl_status tl_charge_expectation(const struct tl_charge *q,
                                     const char *bits,
                                     const char *letters,
                                     double alpha,
                                     size_t depth,
                                     double *out);

// Runs the decay experiment described by `cfg`.
//
// # Safety
// `cfg` must be a live handle; `out` must be writable.
enum tl_status tl_run_decay(const struct tl_config *cfg, struct tl_decay **out);

// # Safety
// `t` must be null or a handle from [`tl_run_decay`], not yet freed.
void tl_decay_free(struct tl_decay *t);

// Number of rows (depths times charges).
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum tl_status tl_decay_len(const struct tl_decay *t, size_t *out);

// Copies row `index` into `out`.
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum tl_status tl_decay_row(const struct tl_decay *t, size_t index, struct tl_decay_row_t *out);

// The table as CSV; free with [`tl_string_free`].
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum tl_status tl_decay_to_csv(const struct tl_decay *t, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TROTTERLAB_H */
