#ifndef VPGEO_H
#define VPGEO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Image pixel coordinates.
 */
#define VPGEO_FRAME_IMAGE 0

/**
 * Coordinates relative to a 2D box.
 */
#define VPGEO_FRAME_ROI_RELATIVE 1

typedef enum VpgeoStatus {
  VPGEO_STATUS_OK = 0,
  VPGEO_STATUS_NULL_POINTER = 1,
  VPGEO_STATUS_INVALID_INPUT = 2,
  VPGEO_STATUS_WRONG_FRAME = 3,
  VPGEO_STATUS_DIMENSION_MISMATCH = 4,
  VPGEO_STATUS_DEGENERATE = 5,
  VPGEO_STATUS_IO = 6,
  VPGEO_STATUS_PANIC = 7,
} VpgeoStatus;

/**
 * Opaque 8-vertex cuboid.
 */
typedef struct VpgeoCuboid VpgeoCuboid;

/**
 * Opaque `H x W x C` feature map.
 */
typedef struct VpgeoFeatureMap VpgeoFeatureMap;

/**
 * Opaque count-sketch hash plan.
 */
typedef struct VpgeoSketchPlan VpgeoSketchPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *vpgeo_last_error(void);

/**
 * # Safety
 * `coords` points to 16 doubles; `out_cuboid` is valid.
 */
enum VpgeoStatus vpgeo_cuboid_new(const double *coords,
                                  int32_t frame,
                                  struct VpgeoCuboid **out_cuboid);

/**
 * # Safety
 * `c` is NULL or a handle from this library that has not been freed.
 */
void vpgeo_cuboid_free(struct VpgeoCuboid *c);

/**
 * Writes the 16 coordinates and the frame constant.
 *
 * # Safety
 * `coords` has room for 16 doubles; `frame` may be NULL.
 */
enum VpgeoStatus vpgeo_cuboid_get(const struct VpgeoCuboid *c, double *coords, int32_t *frame);

/**
 * # Safety
 * `box_xywh` points to 4 doubles; `out_cuboid` is valid.
 */
enum VpgeoStatus vpgeo_cuboid_to_roi_relative(const struct VpgeoCuboid *c,
                                              const double *box_xywh,
                                              struct VpgeoCuboid **out_cuboid);

/**
 * # Safety
 * `box_xywh` points to 4 doubles; `out_cuboid` is valid.
 */
enum VpgeoStatus vpgeo_cuboid_from_roi_relative(const struct VpgeoCuboid *c,
                                                const double *box_xywh,
                                                struct VpgeoCuboid **out_cuboid);

/**
 * Vanishing-point loss of an RoI-relative cuboid. `grad` (16 doubles) may
 * be NULL.
 *
 * # Safety
 * Pointers are valid as described.
 */
enum VpgeoStatus vpgeo_vp_loss(const struct VpgeoCuboid *c, double *value, double *grad);

/**
 * # Safety
 * Pointers are valid as described; `grad` may be NULL.
 */
enum VpgeoStatus vpgeo_loss_3dbranch(const struct VpgeoCuboid *pred,
                                     const struct VpgeoCuboid *target,
                                     double *value,
                                     double *grad);

/**
 * Mean smooth-L1 between two 16-coordinate arrays.
 *
 * # Safety
 * `pred` and `target` point to 16 doubles; `grad` may be NULL.
 */
enum VpgeoStatus vpgeo_smooth_l1(const double *pred,
                                 const double *target,
                                 double *value,
                                 double *grad);

/**
 * # Safety
 * Pointers are valid.
 */
enum VpgeoStatus vpgeo_cuboid_quality(const struct VpgeoCuboid *c, double *cq);

/**
 * # Safety
 * `box_xywh` points to 4 doubles; other pointers are valid.
 */
enum VpgeoStatus vpgeo_pck(const struct VpgeoCuboid *pred,
                           const struct VpgeoCuboid *gt,
                           const double *box_xywh,
                           double alpha,
                           double *fraction);

/**
 * # Safety
 * `a` and `b` point to `len` doubles.
 */
enum VpgeoStatus vpgeo_cosine_similarity(const double *a,
                                         const double *b,
                                         size_t len,
                                         double *similarity);

/**
 * Step-wise average precision of `len` scored pairs; `same` holds 0 or 1.
 *
 * # Safety
 * `scores` and `same` point to `len` elements.
 */
enum VpgeoStatus vpgeo_average_precision(const double *scores,
                                         const uint8_t *same,
                                         size_t len,
                                         double *ap);

/**
 * Homography (row-major, `h[8] == 1`) mapping `dst_corners[i]` to
 * `src_quad[i]`; both are 4 points as 8 doubles.
 *
 * # Safety
 * Inputs point to 8 doubles, `h` has room for 9.
 */
enum VpgeoStatus vpgeo_dlt_homography(const double *dst_corners, const double *src_quad, double *h);

/**
 * New map from `height * width * channels` row-major, channel-last values;
 * `data` may be NULL for zeros.
 *
 * # Safety
 * `data` is NULL or points to the full element count.
 */
enum VpgeoStatus vpgeo_fmap_new(size_t height,
                                size_t width,
                                size_t channels,
                                const double *data,
                                struct VpgeoFeatureMap **out_map);

/**
 * Reads an FMAP file.
 *
 * # Safety
 * `path` is a nul-terminated UTF-8 string.
 */
enum VpgeoStatus vpgeo_fmap_read(const char *path, struct VpgeoFeatureMap **out_map);

/**
 * Writes an FMAP file.
 *
 * # Safety
 * `path` is a nul-terminated UTF-8 string.
 */
enum VpgeoStatus vpgeo_fmap_write(const struct VpgeoFeatureMap *f, const char *path);

/**
 * # Safety
 * Output pointers may be NULL individually.
 */
enum VpgeoStatus vpgeo_fmap_shape(const struct VpgeoFeatureMap *f,
                                  size_t *height,
                                  size_t *width,
                                  size_t *channels);

/**
 * Borrowed pointer to the map's values, valid until the map is freed.
 *
 * # Safety
 * `f` is NULL or a live handle.
 */
const double *vpgeo_fmap_data(const struct VpgeoFeatureMap *f);

/**
 * # Safety
 * `f` is NULL or a live handle.
 */
void vpgeo_fmap_free(struct VpgeoFeatureMap *f);

/**
 * Warps the quad (8 doubles, corners mapping to the output's TL, TR, BR,
 * BL) onto an `out_h x out_w` map.
 *
 * # Safety
 * Pointers are valid as described.
 */
enum VpgeoStatus vpgeo_perspective_roi(const struct VpgeoFeatureMap *f,
                                       const double *quad,
                                       size_t out_h,
                                       size_t out_w,
                                       struct VpgeoFeatureMap **out_map);

/**
 * # Safety
 * Pointers are valid as described.
 */
enum VpgeoStatus vpgeo_roi_align(const struct VpgeoFeatureMap *f,
                                 const double *box_xywh,
                                 size_t out_h,
                                 size_t out_w,
                                 struct VpgeoFeatureMap **out_map);

/**
 * # Safety
 * `out_plan` is valid.
 */
enum VpgeoStatus vpgeo_sketch_plan_new(size_t input_dim,
                                       size_t output_dim,
                                       uint64_t seed,
                                       struct VpgeoSketchPlan **out_plan);

/**
 * # Safety
 * `p` is NULL or a live handle.
 */
void vpgeo_sketch_plan_free(struct VpgeoSketchPlan *p);

/**
 * `out_len` must equal the plan's output dimension.
 *
 * # Safety
 * `x` points to `len` doubles, `out` to `out_len`.
 */
enum VpgeoStatus vpgeo_count_sketch(const struct VpgeoSketchPlan *plan,
                                    const double *x,
                                    size_t len,
                                    double *out,
                                    size_t out_len);

/**
 * Compact bilinear pooling; `out_len` must equal the shared output dimension.
 *
 * # Safety
 * Arrays hold the stated number of doubles.
 */
enum VpgeoStatus vpgeo_mcb_pool(const struct VpgeoSketchPlan *plan_x,
                                const struct VpgeoSketchPlan *plan_y,
                                const double *x,
                                size_t x_len,
                                const double *y,
                                size_t y_len,
                                double *out,
                                size_t out_len);

/**
 * Seeded synthetic scene: image-frame cuboid and its 2D box.
 *
 * # Safety
 * `out_cuboid` is valid; `box_xywh` has room for 4 doubles.
 */
enum VpgeoStatus vpgeo_random_scene(uint64_t seed,
                                    struct VpgeoCuboid **out_cuboid,
                                    double *box_xywh);

/**
 * Gradient-descent refinement of an RoI-relative cuboid. `aborted` (may be
 * NULL) is set to 1 when descent stopped early at the last valid iterate.
 *
 * # Safety
 * Pointers are valid as described.
 */
enum VpgeoStatus vpgeo_refine(const struct VpgeoCuboid *noisy,
                              size_t steps,
                              double learning_rate,
                              double lambda_vp,
                              struct VpgeoCuboid **out_cuboid,
                              int32_t *aborted);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VPGEO_H */
