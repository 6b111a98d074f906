#ifndef DELTAFINGER_H
#define DELTAFINGER_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum DfStatus {
  DF_STATUS_OK = 0,
  DF_STATUS_NULL_POINTER = 1,
  DF_STATUS_INVALID_ARGUMENT = 2,
  DF_STATUS_UNREACHABLE = 3,
  DF_STATUS_JOINT_LIMIT = 4,
  DF_STATUS_NO_INTERSECTION = 5,
  DF_STATUS_SINGULAR = 6,
  DF_STATUS_EMPTY_WORKSPACE = 7,
  DF_STATUS_MESH_PARSE = 8,
  DF_STATUS_IO = 9,
  DF_STATUS_NOT_ON_SURFACE = 10,
  DF_STATUS_PATCH_INCOMPLETE = 11,
  DF_STATUS_OUT_OF_RANGE = 12,
  DF_STATUS_UNBOUNDED = 13,
  DF_STATUS_STATISTICS = 14,
  DF_STATUS_BUFFER_TOO_SMALL = 15,
  DF_STATUS_PANIC = 99,
} DfStatus;

// Kinematic description of the device.
typedef struct DfGeometry DfGeometry;

// Triangle mesh for force rendering.
typedef struct DfMesh DfMesh;

// Servo model: torque limit, rate limit, quantization and joint limits.
typedef struct DfServo DfServo;

// Rendered contact force.
typedef struct DfContact {
  double force[3];
  // Depth behind the reference plane in metres; positive inside.
  double penetration;
  bool contact;
} DfContact;

// One-way ANOVA summary.
typedef struct DfAnova {
  double f;
  double p;
  size_t df_between;
  size_t df_within;
} DfAnova;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length excluding the NUL,
// or 0 when there is no message.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t df_last_error_message(char *buf, size_t len);

// Default device geometry. Never fails; free with [`df_geometry_free`].
struct DfGeometry *df_geometry_default(void);

// Lengths in metres, azimuths and limits in radians.
//
// # Safety
// `azimuths` must point to three doubles; `out` must be writable.
enum DfStatus df_geometry_new(double base_radius,
                              double upper_arm,
                              double forearm,
                              double effector_radius,
                              const double *azimuths,
                              double theta_min,
                              double theta_max,
                              struct DfGeometry **out);

// # Safety
// `geometry` must be null or a handle from this library, freed once.
void df_geometry_free(struct DfGeometry *geometry);

// Joint angles for an effector position. On `Unreachable` or `JointLimit`
// the failing chain index is stored in `failing_chain` when non-null.
//
// # Safety
// Pointers must be valid for three doubles; `failing_chain` may be null.
enum DfStatus df_inverse_kinematics(const struct DfGeometry *geometry,
                                    const double *position,
                                    double *angles_out,
                                    int32_t *failing_chain);

// # Safety
// Pointers must be valid for three doubles.
enum DfStatus df_forward_kinematics(const struct DfGeometry *geometry,
                                    const double *angles,
                                    double *position_out);

// `∂p/∂θ` in m/rad, row-major.
//
// # Safety
// `angles` must hold three doubles, `jacobian_out` nine.
enum DfStatus df_jacobian(const struct DfGeometry *geometry,
                          const double *angles,
                          double *jacobian_out);

// # Safety
// `position` must hold three doubles; `out` must be writable.
enum DfStatus df_reachable(const struct DfGeometry *geometry, const double *position, bool *out);

// Sample reachability on a grid centred on the axis and report the slice
// with the largest inscribed disc.
//
// # Safety
// `z0_out` and `radius_out` must be writable.
enum DfStatus df_workspace_disc(const struct DfGeometry *geometry,
                                double lateral,
                                double z_min,
                                double z_max,
                                double spacing,
                                double *z0_out,
                                double *radius_out);

// Load an OFF or ASCII STL mesh (chosen by extension).
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum DfStatus df_mesh_load(const char *path, struct DfMesh **out);

// Square `[-half, half]²` at height `z`, facing +z.
//
// # Safety
// `out` must be writable.
enum DfStatus df_mesh_plane(double half, double z, struct DfMesh **out);

// # Safety
// `out` must be writable.
enum DfStatus df_mesh_icosphere(double radius, uint32_t level, struct DfMesh **out);

// # Safety
// `mesh` must be null or a handle from this library, freed once.
void df_mesh_free(struct DfMesh *mesh);

// Number of triangles in `mesh`, 0 for null.
//
// # Safety
// `mesh` must be null or a live handle.
size_t df_mesh_triangle_count(const struct DfMesh *mesh);

// Nearest ray hit. `hit` receives whether anything was hit; `point_out` and
// `t_out` are written only on a hit.
//
// # Safety
// `origin`, `direction` and `point_out` hold three doubles; `t_out` and
// `hit` must be writable.
enum DfStatus df_ray_cast(const struct DfMesh *mesh,
                          const double *origin,
                          const double *direction,
                          bool *hit,
                          double *point_out,
                          double *t_out);

// Spring force for a finger position. Non-positive `apex_height` or
// `cone_angle` select the defaults (0.10 m, 15°).
//
// # Safety
// `finger` holds three doubles; `out` must be writable.
enum DfStatus df_render_force(const struct DfMesh *mesh,
                              const double *finger,
                              double stiffness,
                              double apex_height,
                              double cone_angle,
                              struct DfContact *out);

// Servo with default rate and quantization and the torque limit calibrated
// to the default vertical force at the central operating pose.
//
// # Safety
// `out` must be writable.
enum DfStatus df_servo_calibrated(const struct DfGeometry *geometry, struct DfServo **out);

// Unlimited torque and rate, no quantization.
//
// # Safety
// `out` must be writable.
enum DfStatus df_servo_ideal(const struct DfGeometry *geometry, struct DfServo **out);

// # Safety
// `out` must be writable.
enum DfStatus df_servo_new(double torque_limit,
                           double max_rate,
                           double quantization,
                           double theta_min,
                           double theta_max,
                           struct DfServo **out);

// # Safety
// `servo` must be null or a live handle.
double df_servo_torque_limit(const struct DfServo *servo);

// # Safety
// `servo` must be null or a handle from this library, freed once.
void df_servo_free(struct DfServo *servo);

// `τ = Jᵀ·F`.
//
// # Safety
// `angles`, `force` and `torque_out` hold three doubles.
enum DfStatus df_torque_for_force(const struct DfGeometry *geometry,
                                  const double *angles,
                                  const double *force,
                                  double *torque_out);

// Largest force along the unit `direction` within the torque limit.
//
// # Safety
// `angles` and `direction` hold three doubles; `out` must be writable.
enum DfStatus df_force_capability(const struct DfGeometry *geometry,
                                  const struct DfServo *servo,
                                  const double *angles,
                                  const double *direction,
                                  double *out);

// Scale `force` down, direction preserved, to the torque envelope.
//
// # Safety
// `angles`, `force` and `force_out` hold three doubles.
enum DfStatus df_clamp_force(const struct DfGeometry *geometry,
                             const struct DfServo *servo,
                             const double *angles,
                             const double *force,
                             double *force_out);

// Encode a servo command line (`A c0 c1 c2\n`, NUL-terminated) into `buf`.
// `written` receives the line length excluding the NUL.
//
// # Safety
// `angles` holds three doubles; `buf` has `len` writable bytes; `written`
// may be null.
enum DfStatus df_encode_command(const struct DfServo *servo,
                                const double *angles,
                                char *buf,
                                size_t len,
                                size_t *written);

// One-way ANOVA over `group_count` groups stored back to back in `values`;
// group `i` has `group_sizes[i]` observations.
//
// # Safety
// `group_sizes` holds `group_count` entries and `values` their sum.
enum DfStatus df_one_way_anova(const double *values,
                               const size_t *group_sizes,
                               size_t group_count,
                               struct DfAnova *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DELTAFINGER_H */
