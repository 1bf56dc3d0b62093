#ifndef SOCNAV_H
#define SOCNAV_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every entry point.
 */
typedef enum SocnavStatus {
  SOCNAV_STATUS_OK = 0,
  SOCNAV_STATUS_NULL_POINTER = 1,
  SOCNAV_STATUS_INVALID_ARGUMENT = 2,
  SOCNAV_STATUS_CONFIG = 3,
  /**
   * The episode already ended; call `socnav_env_reset`.
   */
  SOCNAV_STATUS_EPISODE_FINISHED = 4,
  SOCNAV_STATUS_WORLD = 5,
  SOCNAV_STATUS_POLICY = 6,
  SOCNAV_STATUS_IO = 7,
  SOCNAV_STATUS_BUFFER_TOO_SMALL = 8,
  SOCNAV_STATUS_PANIC = 99,
} SocnavStatus;

/**
 * Episode status after a step.
 */
typedef enum SocnavDone {
  SOCNAV_DONE_RUNNING = 0,
  SOCNAV_DONE_REACHED = 1,
  SOCNAV_DONE_COLLIDED = 2,
  SOCNAV_DONE_TIMEOUT = 3,
} SocnavDone;

/**
 * Opaque environment handle.
 */
typedef struct SocnavEnv SocnavEnv;

/**
 * Opaque trained-actor handle.
 */
typedef struct SocnavPolicy SocnavPolicy;

typedef struct SocnavPose {
  double x;
  double y;
  double heading;
} SocnavPose;

typedef struct SocnavStep {
  double reward;
  double reward_ego;
  double reward_social;
  double reward_goal;
  enum SocnavDone done;
  uint64_t step;
  double time;
  struct SocnavPose pose;
  bool ego_violation;
  uint32_t social_violations;
} SocnavStep;

/**
 * Motion state of one agent for the social term.
 */
typedef struct SocnavAgent {
  double x;
  double y;
  double heading;
  double radius;
  double speed;
} SocnavAgent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *socnav_last_error(void);

/**
 * Creates an environment for episode `episode` of root seed `root_seed`.
 * `config_toml` may be null for the defaults; otherwise it is a TOML
 * document whose `[env]` table is used.
 *
 * # Safety
 * `config_toml` must be null or a NUL-terminated string; `out` must be
 * valid for writes.
 */
enum SocnavStatus socnav_env_new(const char *config_toml,
                                 uint64_t root_seed,
                                 uint64_t episode,
                                 struct SocnavEnv **out);

/**
 * # Safety
 * `env` must be null or a handle from `socnav_env_new` not yet freed.
 */
void socnav_env_free(struct SocnavEnv *env);

/**
 * Restores the episode's initial state.
 *
 * # Safety
 * `env` must be a live handle.
 */
enum SocnavStatus socnav_env_reset(struct SocnavEnv *env);

/**
 * Advances one policy period under the action `(a_x, a_y)`.
 *
 * # Safety
 * `env` must be a live handle; `out` must be valid for writes.
 */
enum SocnavStatus socnav_env_step(struct SocnavEnv *env,
                                  double a_x,
                                  double a_y,
                                  struct SocnavStep *out);

/**
 * Advances one policy period holding the twist `(linear, angular)`.
 *
 * # Safety
 * `env` must be a live handle; `out` must be valid for writes.
 */
enum SocnavStatus socnav_env_step_twist(struct SocnavEnv *env,
                                        double linear,
                                        double angular,
                                        struct SocnavStep *out);

/**
 * # Safety
 * `env` must be a live handle; `out` must be valid for writes.
 */
enum SocnavStatus socnav_env_pose(const struct SocnavEnv *env, struct SocnavPose *out);

/**
 * Rows (stacked scans) and beams of the motion feature.
 *
 * # Safety
 * `env` must be a live handle; `rows` and `beams` must be valid for writes.
 */
enum SocnavStatus socnav_env_observation_shape(const struct SocnavEnv *env,
                                               uintptr_t *rows,
                                               uintptr_t *beams);

/**
 * Copies the motion feature (row-major, oldest row first, metres) into
 * `ranges` and the goal as `[distance, bearing, initial_distance]` into
 * `goal`.
 *
 * # Safety
 * `env` must be a live handle; `ranges` must hold `len` doubles and `goal`
 * three.
 */
enum SocnavStatus socnav_env_observation(const struct SocnavEnv *env,
                                         double *ranges,
                                         uintptr_t len,
                                         double *goal);

/**
 * Ego term for a surface clearance `clearance` under default reward
 * parameters.
 *
 * # Safety
 * `reward` and `inside_zone` must be valid for writes.
 */
enum SocnavStatus socnav_ego_reward(double clearance,
                                    double robot_radius,
                                    double *reward,
                                    bool *inside_zone);

/**
 * Social term of `robot` against `count` pedestrians under default reward
 * parameters.
 *
 * # Safety
 * `robot` must point to one agent, `pedestrians` to `count` agents;
 * `reward` and `violations` must be valid for writes.
 */
enum SocnavStatus socnav_social_reward(const struct SocnavAgent *robot,
                                       const struct SocnavAgent *pedestrians,
                                       uintptr_t count,
                                       double *reward,
                                       uint32_t *violations);

/**
 * Goal term under default reward parameters.
 *
 * # Safety
 * `reward` must be valid for writes.
 */
enum SocnavStatus socnav_goal_reward(double x,
                                     double y,
                                     double goal_x,
                                     double goal_y,
                                     double start_x,
                                     double start_y,
                                     bool reached,
                                     double *reward);

/**
 * Greedy baseline on one scan of `beams` ranges spread evenly over
 * `fov_deg`. Writes the chosen beam and the commanded twist.
 *
 * # Safety
 * `ranges` must hold `beams` doubles; the outputs must be valid for writes.
 */
enum SocnavStatus socnav_greedy_plan(const double *ranges,
                                     uintptr_t beams,
                                     double fov_deg,
                                     double max_range,
                                     double goal_bearing,
                                     double goal_distance,
                                     uintptr_t *index,
                                     double *linear,
                                     double *angular);

/**
 * Loads the actor of a checkpoint file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum SocnavStatus socnav_policy_load(const char *path, struct SocnavPolicy **out);

/**
 * # Safety
 * `policy` must be null or a handle from `socnav_policy_load` not yet freed.
 */
void socnav_policy_free(struct SocnavPolicy *policy);

/**
 * Input shape the actor was trained on.
 *
 * # Safety
 * `policy` must be a live handle; `rows` and `beams` must be valid for
 * writes.
 */
enum SocnavStatus socnav_policy_input_shape(const struct SocnavPolicy *policy,
                                            uintptr_t *rows,
                                            uintptr_t *beams);

/**
 * Actor output for the environment's current observation.
 *
 * # Safety
 * Both handles must be live; `a_x` and `a_y` must be valid for writes.
 */
enum SocnavStatus socnav_policy_act(const struct SocnavPolicy *policy,
                                    const struct SocnavEnv *env,
                                    double *a_x,
                                    double *a_y);

/**
 * Actor output for a caller-supplied motion feature: `rows × beams` ranges
 * in metres (row-major, oldest first), the goal distance and bearing, and
 * the start-to-goal distance the distance is normalised by.
 *
 * # Safety
 * `policy` must be live; `ranges` must hold `rows * beams` doubles; `a_x`
 * and `a_y` must be valid for writes.
 */
enum SocnavStatus socnav_policy_act_feature(const struct SocnavPolicy *policy,
                                            const double *ranges,
                                            uintptr_t rows,
                                            uintptr_t beams,
                                            double goal_distance,
                                            double goal_bearing,
                                            double initial_distance,
                                            double *a_x,
                                            double *a_y);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOCNAV_H */
