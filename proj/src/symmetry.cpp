#include "mfppo/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfppo/error.hpp"

namespace mfppo {

Permutation::Permutation(std::vector<std::size_t> mapping) : mapping_(std::move(mapping)) {
  std::vector<bool> seen(mapping_.size(), false);
  for (std::size_t v : mapping_) {
    require(v < mapping_.size() && !seen[v], ErrorCode::kInvalidArgument,
            "permutation must be a bijection");
    seen[v] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  return Permutation(std::move(m));
}

Permutation Permutation::random(std::size_t n, Rng& rng) {
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  // Fisher-Yates with our own index draw so the stream is portable.
  for (std::size_t i = n; i > 1; --i) std::swap(m[i - 1], m[uniform_index(rng, i)]);
  return Permutation(std::move(m));
}

JointConfig apply_permutation(const JointConfig& config, const Permutation& perm) {
  require(config.size() == perm.size(), ErrorCode::kInvalidArgument,
          "permutation length does not match configuration");
  JointConfig out;
  out.states.resize(config.size());
  for (std::size_t i = 0; i < config.size(); ++i) out.states[i] = config[perm[i]];
  return out;
}

namespace {

BigInt binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt r = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    r *= (n - k + i);
    r /= i;
  }
  return r;
}

}  // namespace

BigInt class_count(std::int64_t n, std::int64_t s_card) {
  require(n >= 1 && s_card >= 1, ErrorCode::kInvalidArgument, "arguments must be >= 1");
  BigInt total = 0;
  for (std::int64_t k = 1; k <= std::min(s_card, n); ++k)
    total += binomial(n - 1, k - 1) * binomial(s_card, k);
  return total;
}

BigInt count_invariant_table_size(std::int64_t n, std::int64_t s_card, std::int64_t abar_card) {
  require(n >= 1 && s_card >= 1 && abar_card >= 1, ErrorCode::kInvalidArgument,
          "arguments must be >= 1");
  return class_count(n, s_card) * s_card * abar_card;
}

std::vector<JointConfig> enumerate_classes(int n, int s_card) {
  require(n >= 1 && s_card >= 1, ErrorCode::kInvalidArgument, "arguments must be >= 1");
  require(static_cast<double>(n) * std::log10(static_cast<double>(s_card)) <= 7.0 + 1e-12,
          ErrorCode::kTooLarge, "instance too large for enumeration");
  std::vector<JointConfig> out;
  std::vector<StateId> cur(static_cast<std::size_t>(n), 0);
  // Non-decreasing sequences in lexicographic order.
  while (true) {
    out.push_back(JointConfig{cur});
    int i = n - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == s_card - 1) --i;
    if (i < 0) break;
    const StateId v = cur[static_cast<std::size_t>(i)] + 1;
    for (int j = i; j < n; ++j) cur[static_cast<std::size_t>(j)] = v;
  }
  return out;
}

InvarianceReport audit_invariance(const MeanFieldEnv& env, const ObservationFunction& f,
                                  int trials, double tolerance, Rng& rng) {
  require(trials >= 1, ErrorCode::kInvalidArgument, "trials must be >= 1");
  const auto n = static_cast<std::size_t>(env.num_agents());
  InvarianceReport report;
  for (int t = 0; t < trials; ++t) {
    MfObservation obs;
    obs.population.states.resize(n);
    for (auto& s : obs.population.states)
      s = static_cast<StateId>(uniform_index(rng, static_cast<std::size_t>(env.num_states())));
    obs.self_state = obs.population[uniform_index(rng, n)];
    const std::size_t a = uniform_index(rng, env.num_actions());
    const Permutation perm = Permutation::random(n, rng);
    MfObservation permuted{obs.self_state, apply_permutation(obs.population, perm)};
    const double diff = std::abs(f(obs, a) - f(permuted, a));
    report.max_violation = std::max(report.max_violation, diff);
  }
  report.pass = report.max_violation <= tolerance;
  return report;
}

}  // namespace mfppo
