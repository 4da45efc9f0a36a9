#include <math.h>
#include <stdio.h>
#include <string.h>
#include "trotterlab.h"

#define CHECK(call)                                                            \
  do {                                                                         \
    tl_status s_ = (call);                                                     \
    if (s_ != TL_STATUS_OK) {                                                  \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, tl_last_error());      \
      return 1;                                                                \
    }                                                                          \
  } while (0)

int main(void) {
  tl_charge *q = NULL;
  CHECK(tl_charge_new(1, TL_VARIANT_PLUS, 4, &q));
  double v = 0.0;
  CHECK(tl_charge_expectation(q, "0101", NULL, 0.3, 3, &v));
  double delta = tan(0.3);
  if (fabs(v - 2.0 * (delta * delta - 2.0)) > 1e-10) {
    fprintf(stderr, "expectation %.12f\n", v);
    return 1;
  }
  tl_charge_free(q);

  if (tl_charge_new(2, TL_VARIANT_PLUS, 4, &q) != TL_STATUS_INVALID_ARGUMENT || strlen(tl_last_error()) == 0) {
    return 1;
  }

  tl_config *cfg = NULL;
  CHECK(tl_config_from_json("{\"n_sites\": 4, \"depth_max\": 3, \"shots_total\": 2000}", &cfg));
  tl_decay *t = NULL;
  CHECK(tl_run_decay(cfg, &t));
  size_t n = 0;
  CHECK(tl_decay_len(t, &n));
  tl_decay_row_t row;
  CHECK(tl_decay_row(t, n - 1, &row));
  if (n != 4 || row.d != 3 || isnan(row.estimate)) {
    return 1;
  }
  char *csv = NULL;
  CHECK(tl_decay_to_csv(t, &csv));
  printf("%s", csv);
  tl_string_free(csv);
  tl_decay_free(t);
  tl_config_free(cfg);
  printf("ok %s\n", tl_version());
  return 0;
}
