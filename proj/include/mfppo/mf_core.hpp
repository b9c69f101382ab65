#ifndef MFPPO_MF_CORE_HPP
#define MFPPO_MF_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfppo/rng.hpp"

namespace mfppo {

// Index into the finite per-agent state set S.
using StateId = std::int32_t;

// Ordered states of the N agents. Agent identities carry no meaning for the
// dynamics; only the induced multiset does.
struct JointConfig {
  std::vector<StateId> states;

  std::size_t size() const { return states.size(); }
  StateId operator[](std::size_t i) const { return states[i]; }
  bool operator==(const JointConfig&) const = default;
};

// Empirical distribution of an N-agent configuration, stored as integer
// counts so that mass(x) is an exact multiple of 1/N.
class StateHistogram {
 public:
  StateHistogram() = default;
  explicit StateHistogram(std::vector<int> counts);

  std::size_t num_states() const { return counts_.size(); }
  int total() const { return total_; }
  int count(StateId x) const { return counts_[static_cast<std::size_t>(x)]; }
  double mass(StateId x) const {
    return static_cast<double>(count(x)) / static_cast<double>(total_);
  }
  std::span<const int> counts() const { return counts_; }
  std::vector<double> masses() const;

  bool operator==(const StateHistogram&) const = default;

 private:
  std::vector<int> counts_;
  int total_ = 0;
};

// One element of the shared action set: per-agent state -> per-agent action.
struct LocalActionMap {
  std::vector<int> assignment;

  int operator()(StateId s) const { return assignment[static_cast<std::size_t>(s)]; }
  bool operator==(const LocalActionMap&) const = default;
};

// The joint state (s, d_S) as seen by one agent: its own state plus the N
// population samples (the population includes the agent itself).
struct MfObservation {
  StateId self_state = 0;
  JointConfig population;
};

struct Transition {
  MfObservation obs;
  std::size_t action_id = 0;
  double reward = 0.0;
  MfObservation next_obs;
  std::size_t next_action_id = 0;
};

struct KernelOutcome {
  StateId next;
  double prob;
};

// P_loc(. | s, histogram, a): appends the support of the successor state of a
// single agent to `out` (which the caller clears).
using LocalKernel = std::function<void(StateId s, const StateHistogram& histogram,
                                       int agent_action,
                                       std::vector<KernelOutcome>& out)>;
// Team reward r(d_S, abar). Depends on the configuration only through its
// histogram, so permutation invariance holds by construction.
using TeamReward =
    std::function<double(const StateHistogram& histogram, const LocalActionMap& abar)>;
using ResetSampler = std::function<JointConfig(Rng& rng)>;

struct EnvDefinition {
  std::string name;
  int num_states = 0;
  int num_agent_actions = 0;
  int num_agents = 0;
  double gamma = 0.9;
  double reward_bound = 1.0;
  std::vector<LocalActionMap> action_set;
  LocalKernel kernel;
  TeamReward reward;
  ResetSampler reset;
  // Optional: agents reset i.i.d. from this marginal. When set and `reset` is
  // empty, the sampler is derived from it; oracles use it for exact weights.
  std::vector<double> reset_marginal;
};

// Immutable mean-field environment assembled from a shared per-agent kernel
// and a histogram-based team reward.
class MeanFieldEnv {
 public:
  explicit MeanFieldEnv(EnvDefinition def);

  const std::string& name() const { return def_.name; }
  int num_states() const { return def_.num_states; }
  int num_agent_actions() const { return def_.num_agent_actions; }
  int num_agents() const { return def_.num_agents; }
  std::size_t num_actions() const { return def_.action_set.size(); }
  double gamma() const { return def_.gamma; }
  double reward_bound() const { return def_.reward_bound; }
  const std::vector<LocalActionMap>& action_set() const { return def_.action_set; }
  const LocalActionMap& action(std::size_t id) const;

  void kernel(StateId s, const StateHistogram& histogram, int agent_action,
              std::vector<KernelOutcome>& out) const;
  // Throws if the reward violates the declared bound.
  double reward(const StateHistogram& histogram, std::size_t action_id) const;
  JointConfig reset(Rng& rng) const;
  const std::vector<double>& reset_marginal() const { return def_.reset_marginal; }

  // Throws unless `config` has N entries, each a valid state id.
  void validate(const JointConfig& config) const;

 private:
  EnvDefinition def_;
};

// mass[x] = (count of x in config) / N.
StateHistogram empirical_distribution(const JointConfig& config, int num_states);

// Each agent moves independently through the shared kernel given its own
// state, the current histogram, and abar(own state). The reward is the team
// reward of the current configuration.
std::pair<JointConfig, double> env_step(const MeanFieldEnv& env, const JointConfig& config,
                                        std::size_t action_id, Rng& rng);

// Chooses an action id in the shared action set for the given observation.
using ActionSelector = std::function<std::size_t(const MfObservation&, Rng&)>;

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Smallest horizon H with gamma^H <= 1e-6 (1 for gamma = 0).
int horizon_for(double gamma);

// (1 - gamma) * sum_t gamma^t r_t averaged over episodes, starting from
// `start`. The acting agent is the first population member in start.self_state.
MonteCarloEstimate discounted_value_mc(const MeanFieldEnv& env, const ActionSelector& policy,
                                       const MfObservation& start, double gamma,
                                       int episodes, int horizon, Rng& rng);

}  // namespace mfppo

#endif  // MFPPO_MF_CORE_HPP
