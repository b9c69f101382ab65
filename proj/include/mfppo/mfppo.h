/* C interface to the MF-PPO library. All handles are opaque; every call that
 * can fail returns an mfppo_status and leaves a message for mfppo_last_error()
 * on the calling thread. */
#ifndef MFPPO_MFPPO_H
#define MFPPO_MFPPO_H

#include <stddef.h>
#include <stdint.h>

#if defined(MFPPO_BUILDING_LIBRARY)
#define MFPPO_API __attribute__((visibility("default")))
#else
#define MFPPO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mfppo_status {
  MFPPO_OK = 0,
  MFPPO_INVALID_ARGUMENT = 1,
  MFPPO_OUT_OF_RANGE = 2,
  MFPPO_IO = 3,
  MFPPO_NUMERIC = 4,
  MFPPO_TOO_LARGE = 5,
  MFPPO_INTERNAL = 6
} mfppo_status;

typedef struct mfppo_env mfppo_env;
typedef struct mfppo_params mfppo_params;
typedef struct mfppo_text mfppo_text;

typedef struct mfppo_env_info {
  int32_t num_states;
  int32_t num_agent_actions;
  int32_t num_agents;
  size_t num_actions;
  double gamma;
  double reward_bound;
} mfppo_env_info;

typedef struct mfppo_train_options {
  int has_seed;
  uint64_t seed;
  const char* out_dir;      /* NULL keeps the config value */
  int32_t checkpoint_every; /* negative keeps the config value */
} mfppo_train_options;

MFPPO_API const char* mfppo_version(void);
/* Message of the last failed call on this thread ("" if none). */
MFPPO_API const char* mfppo_last_error(void);

MFPPO_API const char* mfppo_text_data(const mfppo_text* text);
MFPPO_API void mfppo_text_free(mfppo_text* text);

/* Scenario name, or the path of a run config. */
MFPPO_API mfppo_status mfppo_env_open(const char* spec, mfppo_env** out);
MFPPO_API void mfppo_env_free(mfppo_env* env);
MFPPO_API mfppo_status mfppo_env_info_get(const mfppo_env* env, mfppo_env_info* out);
MFPPO_API mfppo_status mfppo_env_reset(const mfppo_env* env, uint64_t seed, int32_t* config_out,
                                       size_t n);
MFPPO_API mfppo_status mfppo_env_step(const mfppo_env* env, const int32_t* config, size_t n,
                                      size_t action_id, uint64_t seed, int32_t* next_out,
                                      double* reward_out);

/* Permutation-invariant table size |classes| * |S| * |Abar| as a decimal string. */
MFPPO_API mfppo_status mfppo_count(int64_t num_agents, int64_t num_states, int64_t num_actions,
                                   mfppo_text** out);
MFPPO_API mfppo_status mfppo_count_table(int32_t max_agents, int32_t max_states,
                                         int32_t num_actions, mfppo_text** csv_out);

MFPPO_API mfppo_status mfppo_train(const char* config_path, const mfppo_train_options* options,
                                   mfppo_text** summary_out);
/* all_passed receives 1 iff every suite passed. out_dir may be NULL. */
MFPPO_API mfppo_status mfppo_check(const char* suite, uint64_t seed, const char* out_dir,
                                   int* all_passed, mfppo_text** report_out);
MFPPO_API mfppo_status mfppo_eval(const char* checkpoint, const char* env_spec, int32_t episodes,
                                  uint64_t seed, mfppo_text** csv_out);
MFPPO_API mfppo_status mfppo_oracle_dump(const char* env_spec, const char* out_dir,
                                         mfppo_text** summary_out);

MFPPO_API mfppo_status mfppo_params_load(const char* path, mfppo_params** out);
MFPPO_API mfppo_status mfppo_params_save(const mfppo_params* params, const char* path);
MFPPO_API void mfppo_params_free(mfppo_params* params);
/* F(self_state, population, action_id) of a DeepSet checkpoint on env. */
MFPPO_API mfppo_status mfppo_params_forward(const mfppo_params* params, const mfppo_env* env,
                                            int32_t self_state, const int32_t* population,
                                            size_t n, size_t action_id, double* out);

#ifdef __cplusplus
}
#endif

#endif /* MFPPO_MFPPO_H */
