#ifndef MFPPO_POLICY_HPP
#define MFPPO_POLICY_HPP

#include <optional>
#include <span>
#include <vector>

#include "mfppo/deepset_net.hpp"
#include "mfppo/mf_core.hpp"

namespace mfppo {

// pi(abar | s, d_S) proportional to exp(F^A(s, d_S, abar) / temperature).
// An empty actor stands for the zero energy F^{A,0} = 0, i.e. the uniform
// initial policy.
struct EnergyPolicy {
  std::optional<DeepSetParams> actor;
  double temperature = 1.0;
  std::size_t action_set_size = 0;

  static EnergyPolicy uniform(std::size_t action_set_size);
};

// Max-subtracted softmax; throws on non-finite logits.
std::vector<double> softmax(std::span<const double> logits);

// Energies F^A(obs, abar) for every abar (zeros for the uniform policy).
std::vector<double> action_energies(const EnergyPolicy& policy, const MfObservation& obs,
                                    const FeatureLayout& layout);

std::vector<double> action_distribution(const EnergyPolicy& policy, const MfObservation& obs,
                                        const FeatureLayout& layout);

std::size_t sample_from(std::span<const double> probs, Rng& rng);
std::size_t sample_action(const EnergyPolicy& policy, const MfObservation& obs,
                          const FeatureLayout& layout, Rng& rng);

// argmax_abar F^A(obs, abar), ties to the lowest id.
std::size_t greedy_action(const EnergyPolicy& policy, const MfObservation& obs,
                          const FeatureLayout& layout);

// sum p log(p / q); requires q > 0 wherever p > 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);
double total_variation(std::span<const double> p, std::span<const double> q);

// tau_{k+1} * (fq / upsilon_k + fa_prev / tau_k)
double improvement_target(double fq, double fa_prev, double upsilon_k, double tau_k,
                          double tau_next);

MonteCarloEstimate discounted_value_mc(const MeanFieldEnv& env, const EnergyPolicy& policy,
                                       const FeatureLayout& layout, const MfObservation& start,
                                       double gamma, int episodes, int horizon, Rng& rng);

}  // namespace mfppo

#endif  // MFPPO_POLICY_HPP
