#include <math.h>
#include <stdio.h>
#include <string.h>

#include "mcbc.h"

#define CHECK(call)                                                          \
  do {                                                                       \
    enum McbcStatus st_ = (call);                                            \
    if (st_ != MCBC_STATUS_OK) {                                             \
      fprintf(stderr, "%s -> %d: %s\n", #call, st_, mcbc_last_error_message()); \
      return 1;                                                              \
    }                                                                        \
  } while (0)

int main(void) {
  enum { N = 365 * 6 };
  static double obs[N], model[N], out[N];
  unsigned long long x = 42;
  for (int i = 0; i < N; i++) {
    x = x * 6364136223846793005ULL + 1442695040888963407ULL;
    double u = (double)(x >> 11) / 9007199254740992.0;
    obs[i] = u < 0.6 ? 0.0 : (u - 0.6) * 50.0 + 0.9;
    model[i] = u < 0.4 ? 0.0 : (u - 0.4) * 20.0 + 0.1;
  }
  obs[5] = NAN;

  struct McbcSeries *o = NULL, *m = NULL, *c = NULL;
  struct McbcParams *p = NULL;
  CHECK(mcbc_series_new(1990, 1, 1, obs, N, &o));
  CHECK(mcbc_series_new(1990, 1, 1, model, N, &m));
  CHECK(mcbc_calibrate("mc-loci", o, m, NULL, &p));
  if (strcmp(mcbc_params_method(p), "mc-loci") != 0) return 1;
  CHECK(mcbc_apply(p, m, NULL, &c));
  if (mcbc_series_len(c) != N) return 1;
  CHECK(mcbc_series_values(c, out, N));

  char *json = NULL;
  CHECK(mcbc_params_to_json(p, &json));
  if (strstr(json, "\"method\": \"mc-loci\"") == NULL) return 1;
  mcbc_string_free(json);

  if (mcbc_calibrate("bogus", o, m, NULL, &p) != MCBC_STATUS_INVALID_ARGUMENT) return 1;
  if (strlen(mcbc_last_error_message()) == 0) return 1;

  mcbc_series_free(o);
  mcbc_series_free(m);
  mcbc_series_free(c);
  printf("ok %s\n", mcbc_version());
  return 0;
}
