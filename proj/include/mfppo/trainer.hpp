#ifndef MFPPO_TRAINER_HPP
#define MFPPO_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "mfppo/deepset_net.hpp"
#include "mfppo/mf_core.hpp"
#include "mfppo/oracle.hpp"
#include "mfppo/policy.hpp"

namespace mfppo {

struct TrainSchedule {
  int K = 16;
  int T = 500;
  double upsilon = 1.0;
  double radius_actor = 10.0;
  double radius_critic = 10.0;
  std::size_t m_actor = 128;
  std::size_t m_critic = 128;
  int burn_in = 0;  // 0 selects ceil(5 / (1 - gamma))
  std::uint64_t seed = 0;
  NetKind critic_kind = NetKind::kDeepSet;
  int eval_episodes = 32;
  // Re-draw the inner-loop starting point every call instead of warm-starting.
  bool reinit_per_call = false;

  void validate() const;
  // tau_0 = 1, tau_k = upsilon sqrt(K) / k for k >= 1.
  double tau(int k) const;
  double upsilon_k() const;
  double eta() const;
  int effective_burn_in(double gamma) const;
};

// A critic of either architecture behind one interface.
struct Critic {
  NetKind kind = NetKind::kDeepSet;
  TwoLayerWeights weights;
  FeatureLayout layout;
  MlpLayout mlp_layout;

  SparseInput input(const MfObservation& obs, std::size_t abar_id) const;
  double operator()(const MfObservation& obs, std::size_t abar_id) const;
};

Critic make_critic(const MeanFieldEnv& env, NetKind kind, std::size_t m, double radius, Rng& rng);

// Burn-in rollout from a reset under `policy`, then one emitted transition.
// The perspective agent is a uniformly random index fixed for the rollout.
Transition sample_stationary(const MeanFieldEnv& env, const EnergyPolicy& policy,
                             const FeatureLayout& layout, int burn_in, Rng& rng);
// Same state law; the recorded action is uniform over the action set.
Transition sample_improvement_dist(const MeanFieldEnv& env, const EnergyPolicy& policy_k,
                                   const FeatureLayout& layout, int burn_in, Rng& rng);

// Worker count for sample generation: MFPPO_THREADS if set, else hardware.
int worker_count();

// T samples generated in parallel, sample t drawn from stream {seed, k, phase, t}.
std::vector<Transition> generate_samples(const MeanFieldEnv& env, const EnergyPolicy& policy,
                                         const FeatureLayout& layout, int burn_in, int count,
                                         bool uniform_actions, std::uint64_t seed, int k, int phase);

struct InnerResult {
  double mean_loss = 0.0;
  double max_distance = 0.0;  // max over iterates of ||alpha(t) - alpha0||
};

// Algorithm 2 on pre-generated samples; returns the ergodic average in `critic`.
InnerResult td_policy_evaluation(const MeanFieldEnv& env, std::span<const Transition> samples,
                                 Critic& critic);
// Algorithm 3 on pre-generated samples: regress F^A onto
// tau_{k+1} (F^Q / upsilon_k + F^A_k / tau_k); ergodic average left in `actor`.
InnerResult sgd_policy_improvement(std::span<const Transition> samples, const Critic& critic,
                                   const EnergyPolicy& policy_k, DeepSetParams& actor,
                                   const FeatureLayout& layout, const TrainSchedule& schedule,
                                   int k);

struct IterationRecord {
  int k = 0;
  double td_loss = 0.0;
  double improvement_loss = 0.0;
  double est_value = 0.0;
  double kl_to_prev = 0.0;
  double tau_k = 0.0;  // temperature of the policy produced at iteration k
  double upsilon_k = 0.0;
  double wallclock_ms = 0.0;
};

struct TrainingResult {
  std::vector<IterationRecord> records;
  EnergyPolicy policy;
  Critic critic;
};

using IterationObserver =
    std::function<void(const IterationRecord&, const EnergyPolicy&, const Critic&)>;

// Algorithm 1.
TrainingResult mf_ppo(const MeanFieldEnv& env, const TrainSchedule& schedule,
                      const IterationObserver& observer = {});

// Monte-Carlo value of a policy from fresh resets, (1 - gamma) scaled.
MonteCarloEstimate estimate_value(const MeanFieldEnv& env, const EnergyPolicy& policy,
                                  int episodes, bool greedy, std::uint64_t seed, std::uint64_t tag);

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const IterationRecord& r);

// Network policy and critic lifted to the quotient classes.
ClassPolicy lift_policy(const EnergyPolicy& policy, const QuotientMDP& q,
                        const FeatureLayout& layout, bool greedy);
QTable lift_critic(const Critic& critic, const QuotientMDP& q);

}  // namespace mfppo

#endif  // MFPPO_TRAINER_HPP
