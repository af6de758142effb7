#include <math.h>
#include <stdio.h>
#include "evwave.h"

#define CHECK(expr)                                                              \
  do {                                                                           \
    EvwStatus s_ = (expr);                                                       \
    if (s_ != EVW_STATUS_OK) {                                                   \
      const char *m_ = evw_last_error_message();                                 \
      fprintf(stderr, "%s -> %d: %s\n", #expr, (int)s_, m_ ? m_ : "(none)");    \
      return 1;                                                                  \
    }                                                                            \
  } while (0)

int main(void) {
  double x[16], ll[4], lh[4], hl[4], hh[4], back[16], pooled[4];
  for (int i = 0; i < 16; i++) x[i] = (double)(i * i % 7) - 2.5;
  CHECK(evw_dwt2d(x, 4, 4, ll, lh, hl, hh));
  CHECK(evw_idwt2d(ll, lh, hl, hh, 2, 2, back));
  for (int i = 0; i < 16; i++)
    if (fabs(back[i] - x[i]) > 1e-12) return 2;
  CHECK(evw_wavelet_pool(x, 4, 4, pooled));
  for (int i = 0; i < 4; i++)
    if (fabs(pooled[i] - ll[i]) > 1e-12) return 3;

  EvwDecayParams p = evw_decay_params_default();
  EvwRepresenter *rep = NULL;
  CHECK(evw_representer_new(4, 2, &p, &rep));
  EvwEvent evs[2] = {{10, 1, 0, 1}, {20, 3, 1, -1}};
  unsigned char frame[8];
  CHECK(evw_representer_push(rep, evs, 2, 1000, frame, sizeof frame));
  evw_representer_free(rep);
  if (!(frame[1] > frame[0] && frame[7] < frame[0])) return 4;

  if (evw_representer_new(0, 2, &p, &rep) != EVW_STATUS_INVALID_ARGUMENT) return 5;
  if (evw_last_error_message() == NULL) return 6;

  double ploc[3] = {0.3, 0.5, 1.0}, ccls[3] = {0.0, 0.5, 0.5};
  size_t idx[2];
  CHECK(evw_select_queries(ploc, ccls, 3, 2, idx));
  if (idx[0] != 1 || idx[1] != 0) return 7;

  printf("ok\n");
  return 0;
}
