#ifndef HOI_H
#define HOI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HoiSelectionCase {
  HOI_SELECTION_CASE_MIN_ANGLE = 0,
  HOI_SELECTION_CASE_STABLE_NEAR_MAX = 1,
  HOI_SELECTION_CASE_CONSTRAINED_NEAR_MAX = 2,
} HoiSelectionCase;

typedef enum HoiStatus {
  HOI_STATUS_OK = 0,
  HOI_STATUS_NULL_POINTER = 1,
  HOI_STATUS_INVALID_ARGUMENT = 2,
  HOI_STATUS_EMPTY_SAMPLE = 3,
  HOI_STATUS_DIMENSION_MISMATCH = 4,
  HOI_STATUS_DEGENERATE = 5,
  HOI_STATUS_NO_INTERACTION = 6,
  HOI_STATUS_NO_VALID_FRAMES = 7,
  HOI_STATUS_DIVERGED = 8,
  HOI_STATUS_IO = 9,
  HOI_STATUS_INTERNAL = 10,
} HoiStatus;

/**
 * Opaque hand template.
 */
typedef struct HoiTemplate HoiTemplate;

typedef struct HoiContactParams {
  double alpha;
  double beta;
  double eps;
  double gamma;
  size_t k;
  size_t min_hits;
} HoiContactParams;

/**
 * Thresholds of the interaction-frame rule, angles in degrees.
 */
typedef struct HoiSelectionThresholds {
  double max_min_angle;
  double min_max_angle;
  double dt_iou_thres;
} HoiSelectionThresholds;

typedef struct HoiHandParams {
  double global_rot[3];
  double trans[3];
  double pose[45];
  double shape[6];
} HoiHandParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`) and returns the full message
 * length in bytes excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t hoi_last_error_message(char *buf, size_t len);

struct HoiContactParams hoi_contact_params_default(void);

struct HoiSelectionThresholds hoi_selection_thresholds_default(void);

/**
 * Identity rotation, zero translation and pose, unit shape.
 */
struct HoiHandParams hoi_hand_params_default(void);

/**
 * Builds the default capsule hand template into `*out`; release it with
 * [`hoi_template_free`].
 *
 * # Safety
 * `out` must be null or a valid pointer to writable storage.
 */
enum HoiStatus hoi_template_new(struct HoiTemplate **out);

/**
 * # Safety
 * `t` must be null or a handle from [`hoi_template_new`] not yet freed.
 */
void hoi_template_free(struct HoiTemplate *t);

/**
 * # Safety
 * `t` must be null or a live template handle.
 */
size_t hoi_template_vertex_count(const struct HoiTemplate *t);

/**
 * # Safety
 * `t` must be null or a live template handle.
 */
size_t hoi_template_face_count(const struct HoiTemplate *t);

size_t hoi_joint_count(void);

/**
 * Writes `3 * face_count` vertex indices.
 *
 * # Safety
 * `t` must be a live handle and `out` must hold `3 * face_count` values.
 */
enum HoiStatus hoi_template_faces(const struct HoiTemplate *t, uint32_t *out);

/**
 * Poses the template. `out_vertices` receives `3 * vertex_count` values,
 * `out_joints` (nullable) `3 * 21`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum HoiStatus hoi_pose_hand(const struct HoiTemplate *t,
                             const struct HoiHandParams *params,
                             double *out_vertices,
                             double *out_joints);

/**
 * Contact maps of an object and a hand point cloud as 0/1 bytes.
 * `params` may be null for the defaults.
 *
 * # Safety
 * `obj`/`hand` hold `3 * n` values; `out_obj`/`out_hand` hold `n_obj` and
 * `n_hand` bytes.
 */
enum HoiStatus hoi_contact_maps(const double *obj,
                                size_t n_obj,
                                const double *hand,
                                size_t n_hand,
                                const struct HoiContactParams *params,
                                uint8_t *out_obj,
                                uint8_t *out_hand);

/**
 * Fréchet distance between two Gaussians of dimension `dim`; covariances
 * are `dim * dim` row-major.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum HoiStatus hoi_frechet_distance(size_t dim,
                                    const double *mu_a,
                                    const double *cov_a,
                                    const double *mu_b,
                                    const double *cov_b,
                                    double *out);

/**
 * Rotation angle in degrees of a 2×3 row-major affine.
 *
 * # Safety
 * `affine` holds 6 values; `out` is writable.
 */
enum HoiStatus hoi_rotation_angle(const double *affine, double *out);

/**
 * Interaction-frame rule over per-frame angles (degrees) and IoUs.
 * `valid` (nullable, nonzero = valid) and `thresholds` (nullable) default
 * to all-valid and the standard thresholds.
 *
 * # Safety
 * Arrays hold `n` values; outputs are writable.
 */
enum HoiStatus hoi_select_hoi_frame(size_t n,
                                    const double *theta,
                                    const double *iou,
                                    const uint8_t *valid,
                                    const struct HoiSelectionThresholds *thresholds,
                                    size_t *out_index,
                                    enum HoiSelectionCase *out_case);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOI_H */
