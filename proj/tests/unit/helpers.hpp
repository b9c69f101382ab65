#ifndef MFPPO_TESTS_HELPERS_HPP
#define MFPPO_TESTS_HELPERS_HPP

#include <string>
#include <vector>

#include "mfppo/envs.hpp"

namespace testenv {

// Single-action tabular env with the given kernel[s][s'] and reward[s].
inline mfppo::MeanFieldEnv single_action(int num_states, int num_agents, double gamma,
                                         std::vector<double> kernel, std::vector<double> reward) {
  mfppo::TabularSpec spec;
  spec.name = "single-action";
  spec.num_states = num_states;
  spec.num_agent_actions = 1;
  spec.num_agents = num_agents;
  spec.gamma = gamma;
  spec.action_set = {mfppo::LocalActionMap{std::vector<int>(static_cast<std::size_t>(num_states), 0)}};
  spec.kernel = std::move(kernel);
  spec.reward = std::move(reward);
  return mfppo::make_tabular_env(spec);
}

inline mfppo::MeanFieldEnv identity_env(int num_states, int num_agents) {
  mfppo::TabularSpec spec;
  spec.name = "identity";
  spec.num_states = num_states;
  spec.num_agent_actions = 2;
  spec.num_agents = num_agents;
  spec.gamma = 0.9;
  for (int s = 0; s < num_states; ++s)
    for (int a = 0; a < 2; ++a)
      for (int t = 0; t < num_states; ++t) spec.kernel.push_back(s == t ? 1.0 : 0.0);
  for (int s = 0; s < num_states; ++s) {
    spec.reward.push_back(-0.1 * s);
    spec.reward.push_back(-0.05 * s);
  }
  spec.action_set = {mfppo::LocalActionMap{std::vector<int>(static_cast<std::size_t>(num_states), 0)},
                     mfppo::LocalActionMap{std::vector<int>(static_cast<std::size_t>(num_states), 1)}};
  return mfppo::make_tabular_env(spec);
}

// Three-state ring with congestion and a crowding penalty, so the kernel and
// reward both depend on the population histogram.
inline mfppo::TabularSpec crowded_ring_spec(int num_agents) {
  mfppo::TabularSpec spec;
  spec.name = "crowded-ring";
  spec.num_states = 3;
  spec.num_agent_actions = 2;
  spec.num_agents = num_agents;
  spec.gamma = 0.8;
  spec.action_set = {mfppo::LocalActionMap{{0, 0, 0}}, mfppo::LocalActionMap{{1, 1, 1}},
                     mfppo::LocalActionMap{{0, 1, 0}}};
  spec.kernel = {0.7, 0.2, 0.1, 0.1, 0.6, 0.3,  //
                 0.2, 0.7, 0.1, 0.1, 0.2, 0.7,  //
                 0.1, 0.2, 0.7, 0.6, 0.1, 0.3};
  spec.reward = {0.0, -0.3, -0.4, -0.2, -0.9, -0.5};
  spec.congestion = 0.3;
  spec.crowd = 0.1;
  spec.reward_bound = 1.1;
  spec.reset_marginal = {0.5, 0.3, 0.2};
  return spec;
}

}  // namespace testenv

#endif  // MFPPO_TESTS_HELPERS_HPP
