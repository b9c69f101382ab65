#include "mfppo/mfppo.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "mfppo/deepset_net.hpp"
#include "mfppo/error.hpp"
#include "mfppo/run.hpp"
#include "mfppo/symmetry.hpp"

struct mfppo_env {
  mfppo::MeanFieldEnv env;
};

struct mfppo_params {
  mfppo::TwoLayerWeights weights;
  mfppo::NetKind kind;
};

struct mfppo_text {
  std::string data;
};

namespace {

thread_local std::string tl_last_error;

mfppo_status to_status(mfppo::ErrorCode code) {
  switch (code) {
    case mfppo::ErrorCode::kInvalidArgument: return MFPPO_INVALID_ARGUMENT;
    case mfppo::ErrorCode::kOutOfRange: return MFPPO_OUT_OF_RANGE;
    case mfppo::ErrorCode::kTooLarge: return MFPPO_TOO_LARGE;
    case mfppo::ErrorCode::kNumeric: return MFPPO_NUMERIC;
    case mfppo::ErrorCode::kIo: return MFPPO_IO;
  }
  return MFPPO_INTERNAL;
}

template <class F>
mfppo_status guarded(F&& f) {
  try {
    tl_last_error.clear();
    f();
    return MFPPO_OK;
  } catch (const mfppo::Error& e) {
    tl_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    tl_last_error = "out of memory";
    return MFPPO_INTERNAL;
  } catch (const std::exception& e) {
    tl_last_error = e.what();
    return MFPPO_INTERNAL;
  } catch (...) {
    tl_last_error = "unknown error";
    return MFPPO_INTERNAL;
  }
}

void require_ptr(const void* p, const char* what) {
  mfppo::require(p != nullptr, mfppo::ErrorCode::kInvalidArgument,
                 std::string(what) + " must not be null");
}

mfppo_text* make_text(std::string s) { return new mfppo_text{std::move(s)}; }

mfppo::JointConfig to_config(const mfppo_env* env, const int32_t* states, size_t n) {
  require_ptr(states, "config");
  mfppo::JointConfig c;
  c.states.assign(states, states + n);
  env->env.validate(c);
  return c;
}

}  // namespace

extern "C" {

const char* mfppo_version(void) { return "1.0.0"; }

const char* mfppo_last_error(void) { return tl_last_error.c_str(); }

const char* mfppo_text_data(const mfppo_text* text) { return text ? text->data.c_str() : ""; }

void mfppo_text_free(mfppo_text* text) { delete text; }

mfppo_status mfppo_env_open(const char* spec, mfppo_env** out) {
  return guarded([&] {
    require_ptr(spec, "spec");
    require_ptr(out, "out");
    *out = new mfppo_env{mfppo::resolve_env_spec(spec)};
  });
}

void mfppo_env_free(mfppo_env* env) { delete env; }

mfppo_status mfppo_env_info_get(const mfppo_env* env, mfppo_env_info* out) {
  return guarded([&] {
    require_ptr(env, "env");
    require_ptr(out, "out");
    out->num_states = env->env.num_states();
    out->num_agent_actions = env->env.num_agent_actions();
    out->num_agents = env->env.num_agents();
    out->num_actions = env->env.num_actions();
    out->gamma = env->env.gamma();
    out->reward_bound = env->env.reward_bound();
  });
}

mfppo_status mfppo_env_reset(const mfppo_env* env, uint64_t seed, int32_t* config_out, size_t n) {
  return guarded([&] {
    require_ptr(env, "env");
    require_ptr(config_out, "config_out");
    mfppo::require(n == static_cast<size_t>(env->env.num_agents()),
                   mfppo::ErrorCode::kInvalidArgument, "buffer length does not match N");
    mfppo::Rng rng = mfppo::make_stream({seed});
    const mfppo::JointConfig c = env->env.reset(rng);
    std::copy(c.states.begin(), c.states.end(), config_out);
  });
}

mfppo_status mfppo_env_step(const mfppo_env* env, const int32_t* config, size_t n,
                            size_t action_id, uint64_t seed, int32_t* next_out,
                            double* reward_out) {
  return guarded([&] {
    require_ptr(env, "env");
    require_ptr(next_out, "next_out");
    require_ptr(reward_out, "reward_out");
    const mfppo::JointConfig c = to_config(env, config, n);
    mfppo::Rng rng = mfppo::make_stream({seed});
    auto [next, r] = mfppo::env_step(env->env, c, action_id, rng);
    std::copy(next.states.begin(), next.states.end(), next_out);
    *reward_out = r;
  });
}

mfppo_status mfppo_count(int64_t num_agents, int64_t num_states, int64_t num_actions,
                         mfppo_text** out) {
  return guarded([&] {
    require_ptr(out, "out");
    *out = make_text(mfppo::count_invariant_table_size(num_agents, num_states, num_actions).str());
  });
}

mfppo_status mfppo_count_table(int32_t max_agents, int32_t max_states, int32_t num_actions,
                               mfppo_text** csv_out) {
  return guarded([&] {
    require_ptr(csv_out, "csv_out");
    *csv_out = make_text(mfppo::count_table(max_agents, max_states, num_actions));
  });
}

mfppo_status mfppo_train(const char* config_path, const mfppo_train_options* options,
                         mfppo_text** summary_out) {
  return guarded([&] {
    require_ptr(config_path, "config_path");
    mfppo::TrainOverrides ov;
    if (options) {
      if (options->has_seed) ov.seed = options->seed;
      if (options->out_dir) ov.out = std::string(options->out_dir);
      if (options->checkpoint_every >= 0) ov.checkpoint_every = options->checkpoint_every;
    }
    std::string summary = mfppo::run_training(config_path, ov);
    if (summary_out) *summary_out = make_text(std::move(summary));
  });
}

mfppo_status mfppo_check(const char* suite, uint64_t seed, const char* out_dir, int* all_passed,
                         mfppo_text** report_out) {
  return guarded([&] {
    require_ptr(suite, "suite");
    bool pass = false;
    std::string text = mfppo::run_checks(suite, seed, out_dir ? out_dir : "", &pass);
    if (all_passed) *all_passed = pass ? 1 : 0;
    if (report_out) *report_out = make_text(std::move(text));
  });
}

mfppo_status mfppo_eval(const char* checkpoint, const char* env_spec, int32_t episodes,
                        uint64_t seed, mfppo_text** csv_out) {
  return guarded([&] {
    require_ptr(checkpoint, "checkpoint");
    require_ptr(env_spec, "env_spec");
    require_ptr(csv_out, "csv_out");
    *csv_out = make_text(mfppo::run_eval(checkpoint, env_spec, episodes, seed).csv);
  });
}

mfppo_status mfppo_oracle_dump(const char* env_spec, const char* out_dir, mfppo_text** summary_out) {
  return guarded([&] {
    require_ptr(env_spec, "env_spec");
    require_ptr(out_dir, "out_dir");
    std::string s = mfppo::oracle_dump(env_spec, out_dir);
    if (summary_out) *summary_out = make_text(std::move(s));
  });
}

mfppo_status mfppo_params_load(const char* path, mfppo_params** out) {
  return guarded([&] {
    require_ptr(path, "path");
    require_ptr(out, "out");
    auto p = std::make_unique<mfppo_params>();
    p->weights = mfppo::load_checkpoint(path, &p->kind);
    *out = p.release();
  });
}

mfppo_status mfppo_params_save(const mfppo_params* params, const char* path) {
  return guarded([&] {
    require_ptr(params, "params");
    require_ptr(path, "path");
    mfppo::save_checkpoint(path, params->weights, params->kind);
  });
}

void mfppo_params_free(mfppo_params* params) { delete params; }

mfppo_status mfppo_params_forward(const mfppo_params* params, const mfppo_env* env,
                                  int32_t self_state, const int32_t* population, size_t n,
                                  size_t action_id, double* out) {
  return guarded([&] {
    require_ptr(params, "params");
    require_ptr(env, "env");
    require_ptr(out, "out");
    mfppo::require(params->kind == mfppo::NetKind::kDeepSet, mfppo::ErrorCode::kInvalidArgument,
                   "forward needs a DeepSet checkpoint");
    const mfppo::FeatureLayout layout{env->env.num_states(),
                                      static_cast<int>(env->env.num_actions())};
    mfppo::require(params->weights.d == layout.dim(), mfppo::ErrorCode::kInvalidArgument,
                   "checkpoint does not match environment");
    mfppo::MfObservation obs{self_state, to_config(env, population, n)};
    *out = mfppo::forward(params->weights, mfppo::deepset_input(obs, action_id, layout));
  });
}

}  // extern "C"
