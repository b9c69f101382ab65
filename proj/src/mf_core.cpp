#include "mfppo/mf_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfppo/error.hpp"

namespace mfppo {

StateHistogram::StateHistogram(std::vector<int> counts) : counts_(std::move(counts)) {
  for (int c : counts_) require(c >= 0, ErrorCode::kInvalidArgument, "negative count in histogram");
  total_ = std::accumulate(counts_.begin(), counts_.end(), 0);
  require(total_ > 0, ErrorCode::kInvalidArgument, "degenerate configuration");
}

std::vector<double> StateHistogram::masses() const {
  std::vector<double> out(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i) out[i] = mass(static_cast<StateId>(i));
  return out;
}

StateHistogram empirical_distribution(const JointConfig& config, int num_states) {
  require(!config.states.empty(), ErrorCode::kInvalidArgument, "degenerate configuration");
  std::vector<int> counts(static_cast<std::size_t>(num_states), 0);
  for (StateId s : config.states) {
    require(s >= 0 && s < num_states, ErrorCode::kOutOfRange, "state id out of range");
    ++counts[static_cast<std::size_t>(s)];
  }
  return StateHistogram(std::move(counts));
}

MeanFieldEnv::MeanFieldEnv(EnvDefinition def) : def_(std::move(def)) {
  require(def_.num_states >= 1, ErrorCode::kInvalidArgument, "environment needs at least one state");
  require(def_.num_agent_actions >= 1, ErrorCode::kInvalidArgument,
          "environment needs at least one per-agent action");
  require(def_.num_agents >= 1, ErrorCode::kInvalidArgument, "environment needs N >= 1");
  require(def_.gamma >= 0.0 && def_.gamma < 1.0, ErrorCode::kInvalidArgument,
          "gamma must lie in [0, 1)");
  require(def_.reward_bound > 0.0, ErrorCode::kInvalidArgument, "reward bound must be positive");
  require(!def_.action_set.empty(), ErrorCode::kInvalidArgument, "empty action set");
  for (const auto& abar : def_.action_set) {
    require(abar.assignment.size() == static_cast<std::size_t>(def_.num_states),
            ErrorCode::kInvalidArgument, "local action map must cover every state");
    for (int a : abar.assignment)
      require(a >= 0 && a < def_.num_agent_actions, ErrorCode::kOutOfRange,
              "local action map entry out of range");
  }
  if (!def_.reset && !def_.reset_marginal.empty()) {
    require(def_.reset_marginal.size() == static_cast<std::size_t>(def_.num_states),
            ErrorCode::kInvalidArgument, "reset marginal must cover every state");
    double total = 0.0;
    for (double p : def_.reset_marginal) {
      require(p >= 0.0, ErrorCode::kInvalidArgument, "negative reset probability");
      total += p;
    }
    require(std::abs(total - 1.0) <= 1e-9, ErrorCode::kInvalidArgument,
            "reset marginal must sum to 1");
    def_.reset = [marginal = def_.reset_marginal, n = def_.num_agents](Rng& rng) {
      JointConfig c;
      c.states.resize(static_cast<std::size_t>(n));
      for (auto& s : c.states) {
        const double u = uniform01(rng);
        double acc = 0.0;
        s = static_cast<StateId>(marginal.size() - 1);
        for (std::size_t x = 0; x < marginal.size(); ++x) {
          acc += marginal[x];
          if (u < acc) {
            s = static_cast<StateId>(x);
            break;
          }
        }
      }
      return c;
    };
  }
  require(static_cast<bool>(def_.kernel) && static_cast<bool>(def_.reward) &&
              static_cast<bool>(def_.reset),
          ErrorCode::kInvalidArgument, "environment primitives missing");
}

const LocalActionMap& MeanFieldEnv::action(std::size_t id) const {
  require(id < def_.action_set.size(), ErrorCode::kOutOfRange, "action id out of range");
  return def_.action_set[id];
}

void MeanFieldEnv::kernel(StateId s, const StateHistogram& histogram, int agent_action,
                          std::vector<KernelOutcome>& out) const {
  def_.kernel(s, histogram, agent_action, out);
}

double MeanFieldEnv::reward(const StateHistogram& histogram, std::size_t action_id) const {
  const double r = def_.reward(histogram, action(action_id));
  require(std::isfinite(r), ErrorCode::kNumeric, "non-finite reward");
  require(std::abs(r) <= def_.reward_bound + 1e-12, ErrorCode::kInvalidArgument,
          "reward exceeds declared bound r_bar");
  return r;
}

JointConfig MeanFieldEnv::reset(Rng& rng) const {
  JointConfig config = def_.reset(rng);
  validate(config);
  return config;
}

void MeanFieldEnv::validate(const JointConfig& config) const {
  require(config.size() == static_cast<std::size_t>(def_.num_agents), ErrorCode::kInvalidArgument,
          "configuration length does not match N");
  for (StateId s : config.states)
    require(s >= 0 && s < def_.num_states, ErrorCode::kOutOfRange, "state id out of range");
}

std::pair<JointConfig, double> env_step(const MeanFieldEnv& env, const JointConfig& config,
                                        std::size_t action_id, Rng& rng) {
  const LocalActionMap& abar = env.action(action_id);
  env.validate(config);
  const StateHistogram histogram = empirical_distribution(config, env.num_states());
  const double reward = env.reward(histogram, action_id);

  JointConfig next;
  next.states.resize(config.size());
  std::vector<KernelOutcome> outcomes;
  for (std::size_t i = 0; i < config.size(); ++i) {
    const StateId s = config[i];
    outcomes.clear();
    env.kernel(s, histogram, abar(s), outcomes);
    // One uniform per agent, always, so stream consumption is fixed.
    const double u = uniform01(rng);
    double acc = 0.0;
    StateId chosen = outcomes.empty() ? s : outcomes.back().next;
    for (const auto& o : outcomes) {
      acc += o.prob;
      if (u < acc) {
        chosen = o.next;
        break;
      }
    }
    next.states[i] = chosen;
  }
  return {std::move(next), reward};
}

int horizon_for(double gamma) {
  require(gamma >= 0.0 && gamma < 1.0, ErrorCode::kInvalidArgument, "gamma must lie in [0, 1)");
  if (gamma == 0.0) return 1;
  return static_cast<int>(std::ceil(std::log(1e-6) / std::log(gamma)));
}

MonteCarloEstimate discounted_value_mc(const MeanFieldEnv& env, const ActionSelector& policy,
                                       const MfObservation& start, double gamma,
                                       int episodes, int horizon, Rng& rng) {
  require(gamma >= 0.0 && gamma < 1.0, ErrorCode::kInvalidArgument, "gamma must lie in [0, 1)");
  require(episodes >= 1, ErrorCode::kInvalidArgument, "episodes must be >= 1");
  require(horizon >= 1 && std::pow(gamma, horizon) <= 1e-6, ErrorCode::kInvalidArgument,
          "horizon too short: need gamma^horizon <= 1e-6");
  env.validate(start.population);
  const auto self_it =
      std::find(start.population.states.begin(), start.population.states.end(), start.self_state);
  require(self_it != start.population.states.end(), ErrorCode::kInvalidArgument,
          "self state must appear in the population");
  const auto self_index =
      static_cast<std::size_t>(std::distance(start.population.states.begin(), self_it));

  double sum = 0.0;
  double sum_sq = 0.0;
  for (int e = 0; e < episodes; ++e) {
    MfObservation obs = start;
    double ret = 0.0;
    double discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const std::size_t a = policy(obs, rng);
      auto [next, r] = env_step(env, obs.population, a, rng);
      ret += discount * r;
      discount *= gamma;
      obs.population = std::move(next);
      obs.self_state = obs.population[self_index];
    }
    ret *= (1.0 - gamma);
    sum += ret;
    sum_sq += ret * ret;
  }
  const double n = static_cast<double>(episodes);
  MonteCarloEstimate est;
  est.mean = sum / n;
  const double var = episodes > 1 ? std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1.0)) : 0.0;
  est.std_error = std::sqrt(var / n);
  return est;
}

}  // namespace mfppo
