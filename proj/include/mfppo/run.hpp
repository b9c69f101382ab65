#ifndef MFPPO_RUN_HPP
#define MFPPO_RUN_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfppo/envs.hpp"
#include "mfppo/trainer.hpp"

namespace mfppo {

// Schema:
//   [run]       env (scenario name, or "inline" for an [env] section), seed,
//               out, checkpoint_every, critic (deepset | mlp), eval_episodes,
//               checks (space-separated suite names run after training)
//   [schedule]  K, T, upsilon, radius_actor, radius_critic, m_actor,
//               m_critic, burn_in, reinit_per_call (0 | 1)
//   [env]       optional inline environment spec (see envs.hpp)
// Unknown sections or keys are errors.
struct RunConfig {
  std::string env = "";
  std::string out = "run";
  int checkpoint_every = 0;
  std::vector<std::string> checks;
  TrainSchedule schedule;
  std::string origin;
  std::string text;
};

RunConfig parse_run_config(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::string& path);
MeanFieldEnv resolve_env(const RunConfig& config);
// A scenario name, or the path of a run config whose environment is used.
MeanFieldEnv resolve_env_spec(const std::string& spec);

struct TrainOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> checkpoint_every;
};

// Writes metrics.csv, manifest.ini, actor.bin, critic.bin (and per-iteration
// checkpoints) under the output directory. Returns a short summary.
std::string run_training(const std::string& config_path, const TrainOverrides& overrides);

// Resolved config, seed and a git-style SHA-1 over the inputs.
std::string content_hash(const std::string& data);

struct EvalReport {
  MonteCarloEstimate greedy;
  MonteCarloEstimate uniform;
  int episodes = 0;
  std::string csv;
};
// Greedy (argmax-energy) rollouts of an actor checkpoint next to the uniform
// baseline on the same seeds.
EvalReport run_eval(const std::string& checkpoint, const std::string& env_spec, int episodes,
                    std::uint64_t seed);

// classes.csv, v_star.csv, q_uniform.csv in out_dir.
std::string oracle_dump(const std::string& env_spec, const std::string& out_dir);

std::string count_table(int max_n, int max_s, int abar);

// Runs the suite, writes <suite>.csv files into out_dir when non-empty.
std::string run_checks(const std::string& suite, std::uint64_t seed, const std::string& out_dir,
                       bool* all_passed);

}  // namespace mfppo

#endif  // MFPPO_RUN_HPP
