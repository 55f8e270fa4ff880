#ifndef GBER_H
#define GBER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GberStatus {
  GBER_STATUS_OK = 0,
  GBER_STATUS_NULL_POINTER = 1,
  GBER_STATUS_INVALID_ARGUMENT = 2,
  GBER_STATUS_INVALID_UTF8 = 3,
  GBER_STATUS_IO = 4,
  GBER_STATUS_TRAINING = 5,
  GBER_STATUS_PANIC = 99,
} GberStatus;

// A trained agent restored from a checkpoint.
typedef struct GberAgent GberAgent;

// A maze plus the random stream used by `gber_maze_reset`.
typedef struct GberMaze GberMaze;

typedef struct GberVec2 {
  double x;
  double y;
} GberVec2;

typedef struct GberStepOutcome {
  struct GberVec2 next_state;
  struct GberVec2 achieved_goal;
  double reward;
  bool collided;
  bool success;
} GberStepOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *gber_last_error_message(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void gber_string_free(char *s);

// Loads a maze by name (`square_d`, `experiment_3_3_2`, ...) or from ASCII
// text. `seed` drives the spawn noise and goal choice of resets.
//
// # Safety
// `name_or_ascii` must be a valid C string and `out` a valid pointer.
enum GberStatus gber_maze_load(const char *name_or_ascii,
                               double success_radius,
                               uint64_t seed,
                               struct GberMaze **out);

// # Safety
// `maze` must come from `gber_maze_load` and not have been freed. Null is ignored.
void gber_maze_free(struct GberMaze *maze);

// Samples a start position and a desired goal.
//
// # Safety
// All pointers must be valid.
enum GberStatus gber_maze_reset(struct GberMaze *maze,
                                struct GberVec2 *start,
                                struct GberVec2 *goal);

// One environment step. The action is clipped to the unit box.
//
// # Safety
// `maze` and `out` must be valid.
enum GberStatus gber_maze_step(const struct GberMaze *maze,
                               struct GberVec2 state,
                               struct GberVec2 action,
                               struct GberVec2 goal,
                               struct GberStepOutcome *out);

// ASCII rendering; free the result with `gber_string_free`.
//
// # Safety
// `maze` and `out` must be valid.
enum GberStatus gber_maze_render(const struct GberMaze *maze, char **out);

// 0 when `achieved` lies within `radius` of `goal`, -1 otherwise.
double gber_sparse_reward(struct GberVec2 achieved, struct GberVec2 goal, double radius);

// Per-category minibatch counts for a ratio string such as `1_4_3_1_1_5`.
// `out_counts` must hold six entries.
//
// # Safety
// `ratios` must be a valid C string and `out_counts` point to six `size_t`.
enum GberStatus gber_apportion(const char *ratios, size_t batch_size, size_t *out_counts);

// Restores the agent stored in a checkpoint file.
//
// # Safety
// `path` must be a valid C string and `out` a valid pointer.
enum GberStatus gber_agent_load(const char *path, struct GberAgent **out);

// # Safety
// `agent` must come from `gber_agent_load` and not have been freed. Null is ignored.
void gber_agent_free(struct GberAgent *agent);

// Greedy action of the agent.
//
// # Safety
// `agent` and `out` must be valid.
enum GberStatus gber_agent_act(const struct GberAgent *agent,
                               struct GberVec2 state,
                               struct GberVec2 goal,
                               struct GberVec2 *out);

// Runs a full training run from a TOML config, writing `progress.csv` and
// `checkpoint.json` into `out_dir`.
//
// # Safety
// Both arguments must be valid C strings.
enum GberStatus gber_train(const char *config_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GBER_H */
