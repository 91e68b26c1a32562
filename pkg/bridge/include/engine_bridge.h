/* engine_bridge.h
 *
 * C-compatible contract for the depth-guided token-compression engine.
 * The Python package `enginebridge` implements exactly this surface; a
 * native shim written against these signatures can swap in without
 * touching callers.
 *
 * Conventions
 *   - All input buffers are flat, contiguous, row-major, little-endian
 *     float32. Output embeddings are float64 so results stay bit-identical
 *     to the native engine.
 *   - A handle is valid from eb_create until eb_close. Handles must not
 *     be stepped from two threads concurrently; distinct handles are
 *     independent.
 *   - Dimensions are fixed at creation and never change over a handle's
 *     lifetime.
 */

#ifndef ENGINE_BRIDGE_H
#define ENGINE_BRIDGE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef int64_t eb_handle;

/* Error codes returned where noted. Python raises exceptions instead. */
enum {
    EB_OK = 0,
    EB_BAD_CONFIG = -1,      /* unknown key or invalid value             */
    EB_BAD_HANDLE = -2,      /* closed or never-created handle           */
    EB_LENGTH_MISMATCH = -3, /* buffer size disagrees with declared dims */
    EB_ENGINE_ERROR = -4     /* propagated engine failure                */
};

/* One camera stream's declared dimensions. An all-zero struct means the
 * stream is absent (only the auxiliary camera may be absent). */
typedef struct {
    int32_t height;         /* depth map rows                  */
    int32_t width;          /* depth map cols                  */
    int32_t grid_h;         /* patch grid rows                 */
    int32_t grid_w;         /* patch grid cols                 */
    int32_t embed_dim;      /* embedding width D               */
    int32_t has_attention;  /* nonzero if attention is supplied */
} eb_camera_dims;

typedef struct {
    eb_camera_dims primary;
    eb_camera_dims auxiliary;
    int32_t chunk_len;      /* action chunk length A */
} eb_dims;

/* Per-camera step statistics. */
typedef struct {
    int32_t retained;       /* token rows written to the output buffer */
    double rho;             /* retained / patch_count                  */
    int32_t merges;         /* merges applied this frame               */
    char phase[16];         /* "warmup" or "steady" (primary only)     */
    char aux_mode[16];      /* "merge" or "full_view" (auxiliary only) */
} eb_camera_stats;

/* Create an engine. Config arrives as n_pairs parallel key/value
 * NUL-terminated strings mirroring the engine's flat config keys
 * (e.g. "r_max" -> "0.7"). Unknown keys or invalid values fail with
 * EB_BAD_CONFIG. On success returns a positive handle. */
eb_handle eb_create(const char **keys, const char **values, int32_t n_pairs,
                    const eb_dims *dims);

/* Step one frame. Input buffer lengths (in floats):
 *   depth_primary   height * width
 *   emb_primary     grid_h * grid_w * embed_dim
 *   attn_primary    grid_h * grid_w, or NULL when the frame has none
 *   depth_aux /     auxiliary camera equivalents, NULL when the stream
 *   emb_aux         is absent
 *   robot           4 + 4 * chunk_len: aperture, ee x/y/z, then the
 *                   action chunk rows (dx, dy, dz, d_aperture)
 *
 * Output buffers are caller-allocated at full-resolution capacity:
 *   out_emb_*       patch_count * embed_dim doubles; the first
 *                   stats->retained rows are valid
 *   out_sizes_*     patch_count int32; first stats->retained valid
 *   out_unmerge_*   patch_count int32; entry i is the retained row that
 *                   patch i folded into
 *
 * events receives this frame's engine events as a ';'-joined string
 * ("kind" or "kind[detail]"), truncated to events_cap bytes.
 * frame_index must increase strictly across calls. */
int32_t eb_step(eb_handle handle, int32_t frame_index,
                const float *depth_primary, const float *emb_primary,
                const float *attn_primary,
                const float *depth_aux, const float *emb_aux,
                const float *robot,
                double *out_emb_primary, int32_t *out_sizes_primary,
                int32_t *out_unmerge_primary,
                double *out_emb_aux, int32_t *out_sizes_aux,
                int32_t *out_unmerge_aux,
                eb_camera_stats *stats_primary, eb_camera_stats *stats_aux,
                char *events, int32_t events_cap);

/* Release a handle. Idempotent failure: closing twice returns
 * EB_BAD_HANDLE. */
int32_t eb_close(eb_handle handle);

#ifdef __cplusplus
}
#endif

#endif /* ENGINE_BRIDGE_H */
