#ifndef EVWAVE_H
#define EVWAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EvwFormat {
  EVW_FORMAT_CSV = 0,
  EVW_FORMAT_BINARY = 1,
} EvwFormat;

typedef enum EvwStatus {
  EVW_STATUS_OK = 0,
  EVW_STATUS_NULL_POINTER = 1,
  EVW_STATUS_INVALID_ARGUMENT = 2,
  EVW_STATUS_DIMENSION_MISMATCH = 3,
  EVW_STATUS_PARSE_ERROR = 4,
  EVW_STATUS_IO_ERROR = 5,
  EVW_STATUS_PANIC = 6,
} EvwStatus;

/**
 * A parsed event file.
 */
typedef struct EvwEventStream EvwEventStream;

/**
 * RepConv weights; the fused kernel is computed on load.
 */
typedef struct EvwRepConv EvwRepConv;

/**
 * Running time-decay surface.
 */
typedef struct EvwRepresenter EvwRepresenter;

typedef struct EvwDecayParams {
  double k;
  double b;
  double c_thresh;
  double s_min;
  double s_max;
} EvwDecayParams;

/**
 * One event. `p` is +1 or -1.
 */
typedef struct EvwEvent {
  uint64_t t;
  uint16_t x;
  uint16_t y;
  int8_t p;
} EvwEvent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *evw_last_error_message(void);

struct EvwDecayParams evw_decay_params_default(void);

/**
 * Decay multiplier applied over `dt_us` microseconds.
 *
 * # Safety
 * `params` must point to a valid `EvwDecayParams`.
 */
enum EvwStatus evw_decay_factor(const struct EvwDecayParams *params, uint64_t dt_us, double *out);

/**
 * Parses an event file. `width`/`height` are required for CSV and ignored
 * (taken from the header) for binary input when zero.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EvwStatus evw_events_load(const char *path,
                               enum EvwFormat format,
                               uint32_t width,
                               uint32_t height,
                               bool polarity01,
                               struct EvwEventStream **out);

/**
 * Number of events in the stream, 0 for a null handle.
 *
 * # Safety
 * `stream` must be null or a live handle from `evw_events_load`.
 */
size_t evw_events_len(const struct EvwEventStream *stream);

/**
 * Sensor size of the stream.
 *
 * # Safety
 * `stream` must be a live handle; `width` and `height` valid pointers.
 */
enum EvwStatus evw_events_dims(const struct EvwEventStream *stream,
                               uint32_t *width,
                               uint32_t *height);

/**
 * Copies up to `cap` events starting at `offset` into `out`.
 *
 * # Safety
 * `stream` must be a live handle and `out` must hold `cap` events.
 */
enum EvwStatus evw_events_copy(const struct EvwEventStream *stream,
                               size_t offset,
                               struct EvwEvent *out,
                               size_t cap,
                               size_t *written);

/**
 * # Safety
 * `stream` must be null or a handle not yet freed.
 */
void evw_events_free(struct EvwEventStream *stream);

/**
 * Creates a surface at the initial level. `params` may be null for defaults.
 *
 * # Safety
 * `params` must be null or valid; `out` must be a valid pointer.
 */
enum EvwStatus evw_representer_new(uint32_t width,
                                   uint32_t height,
                                   const struct EvwDecayParams *params,
                                   struct EvwRepresenter **out);

/**
 * Folds one window of `n` events spanning `dt_us` into the surface and
 * writes the gray frame (`width * height` bytes) to `frame_out`.
 *
 * # Safety
 * `rep` must be live, `events` must hold `n` events and `frame_out`
 * `frame_len` bytes.
 */
enum EvwStatus evw_representer_push(struct EvwRepresenter *rep,
                                    const struct EvwEvent *events,
                                    size_t n,
                                    uint64_t dt_us,
                                    uint8_t *frame_out,
                                    size_t frame_len);

/**
 * # Safety
 * `rep` must be null or a handle not yet freed.
 */
void evw_representer_free(struct EvwRepresenter *rep);

/**
 * One-level Haar decomposition of a `height x width` matrix into four
 * `height/2 x width/2` subbands.
 *
 * # Safety
 * `x` must hold `width * height` values and each band `width * height / 4`.
 */
enum EvwStatus evw_dwt2d(const double *x,
                         size_t width,
                         size_t height,
                         double *ll,
                         double *lh,
                         double *hl,
                         double *hh);

/**
 * Inverse of [`evw_dwt2d`]; `half_width`/`half_height` are the band sizes.
 *
 * # Safety
 * Each band must hold `half_width * half_height` values and `out` four
 * times as many.
 */
enum EvwStatus evw_idwt2d(const double *ll,
                          const double *lh,
                          const double *hl,
                          const double *hh,
                          size_t half_width,
                          size_t half_height,
                          double *out);

/**
 * Haar wavelet pooling: the low-low band of one decomposition level.
 *
 * # Safety
 * `x` must hold `width * height` values and `out` a quarter of that.
 */
enum EvwStatus evw_wavelet_pool(const double *x, size_t width, size_t height, double *out);

/**
 * PSNR in dB between two 8-bit frames; identical frames give +infinity.
 *
 * # Safety
 * `a` and `b` must each hold `width * height` bytes.
 */
enum EvwStatus evw_psnr(const uint8_t *a,
                        const uint8_t *b,
                        size_t width,
                        size_t height,
                        double *out);

/**
 * Writes the indices of the `k` least uncertain of `n` queries to `out`.
 *
 * # Safety
 * `p_loc` and `c_cls` must hold `n` values and `out` `k` indices.
 */
enum EvwStatus evw_select_queries(const double *p_loc,
                                  const double *c_cls,
                                  size_t n,
                                  size_t k,
                                  size_t *out);

/**
 * Loads RepConv weights stored under `prefix` in a manifest file.
 *
 * # Safety
 * `path` and `prefix` must be NUL-terminated strings; `out` valid.
 */
enum EvwStatus evw_repconv_load(const char *path, const char *prefix, struct EvwRepConv **out);

/**
 * Channel counts of a loaded RepConv.
 *
 * # Safety
 * `rc` must be live; the outputs valid pointers.
 */
enum EvwStatus evw_repconv_channels(const struct EvwRepConv *rc,
                                    size_t *in_channels,
                                    size_t *out_channels);

/**
 * Runs the block on an `[n, c, h, w]` input, either through the separate
 * branches (`deploy == false`) or the fused kernel. Output is
 * `[n, out_channels, h, w]`.
 *
 * # Safety
 * `rc` must be live, `x` must hold `n*c*h*w` values and `out` `out_len`.
 */
enum EvwStatus evw_repconv_forward(const struct EvwRepConv *rc,
                                   bool deploy,
                                   const double *x,
                                   size_t n,
                                   size_t c,
                                   size_t h,
                                   size_t w,
                                   double *out,
                                   size_t out_len);

/**
 * # Safety
 * `rc` must be null or a handle not yet freed.
 */
void evw_repconv_free(struct EvwRepConv *rc);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVWAVE_H */
