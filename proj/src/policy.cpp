#include "mfppo/policy.hpp"

#include <algorithm>
#include <cmath>

#include "mfppo/error.hpp"

namespace mfppo {

EnergyPolicy EnergyPolicy::uniform(std::size_t action_set_size) {
  EnergyPolicy p;
  p.temperature = 1.0;
  p.action_set_size = action_set_size;
  return p;
}

std::vector<double> softmax(std::span<const double> logits) {
  require(!logits.empty(), ErrorCode::kInvalidArgument, "softmax of an empty vector");
  double mx = -INFINITY;
  for (double v : logits) {
    require(std::isfinite(v), ErrorCode::kNumeric, "non-finite logit");
    mx = std::max(mx, v);
  }
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

std::vector<double> action_energies(const EnergyPolicy& policy, const MfObservation& obs,
                                    const FeatureLayout& layout) {
  require(policy.action_set_size == static_cast<std::size_t>(layout.num_actions),
          ErrorCode::kInvalidArgument, "policy action set does not match layout");
  std::vector<double> energies(policy.action_set_size, 0.0);
  if (policy.actor) forward_all_actions(*policy.actor, obs, layout, energies);
  return energies;
}

std::vector<double> action_distribution(const EnergyPolicy& policy, const MfObservation& obs,
                                        const FeatureLayout& layout) {
  require(policy.temperature > 0.0, ErrorCode::kInvalidArgument, "temperature must be positive");
  std::vector<double> logits = action_energies(policy, obs, layout);
  for (double& v : logits) v /= policy.temperature;
  return softmax(logits);
}

std::size_t sample_from(std::span<const double> probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding left u above the last partial sum: take the last supported id.
  for (std::size_t i = probs.size(); i > 0; --i)
    if (probs[i - 1] > 0.0) return i - 1;
  return 0;
}

std::size_t sample_action(const EnergyPolicy& policy, const MfObservation& obs,
                          const FeatureLayout& layout, Rng& rng) {
  const std::vector<double> probs = action_distribution(policy, obs, layout);
  return sample_from(probs, rng);
}

std::size_t greedy_action(const EnergyPolicy& policy, const MfObservation& obs,
                          const FeatureLayout& layout) {
  const std::vector<double> e = action_energies(policy, obs, layout);
  std::size_t best = 0;
  for (std::size_t i = 1; i < e.size(); ++i)
    if (e[i] > e[best]) best = i;
  return best;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), ErrorCode::kInvalidArgument, "distributions differ in length");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    require(q[i] > 0.0, ErrorCode::kInvalidArgument, "KL support violation: q = 0 where p > 0");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), ErrorCode::kInvalidArgument, "distributions differ in length");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

double improvement_target(double fq, double fa_prev, double upsilon_k, double tau_k,
                          double tau_next) {
  require(upsilon_k > 0.0 && tau_k > 0.0 && tau_next > 0.0, ErrorCode::kInvalidArgument,
          "rates must be positive");
  return tau_next * (fq / upsilon_k + fa_prev / tau_k);
}

MonteCarloEstimate discounted_value_mc(const MeanFieldEnv& env, const EnergyPolicy& policy,
                                       const FeatureLayout& layout, const MfObservation& start,
                                       double gamma, int episodes, int horizon, Rng& rng) {
  const ActionSelector selector = [&](const MfObservation& obs, Rng& r) {
    return sample_action(policy, obs, layout, r);
  };
  return discounted_value_mc(env, selector, start, gamma, episodes, horizon, rng);
}

}  // namespace mfppo
