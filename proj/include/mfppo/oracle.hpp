#ifndef MFPPO_ORACLE_HPP
#define MFPPO_ORACLE_HPP

#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "mfppo/mf_core.hpp"

namespace mfppo {

// Class (s, M): the distinguished agent's state s and the multiset M of all N
// agent states (as counts), with s in M.
struct QuotientClass {
  StateId self = 0;
  std::vector<int> counts;
};

struct QuotientMDP {
  using Row = std::vector<std::pair<std::size_t, double>>;

  int num_states = 0;
  int num_agents = 0;
  std::size_t num_actions = 0;
  double gamma = 0.0;
  double reward_bound = 1.0;
  std::vector<QuotientClass> classes;
  // Sparse kernel rows and rewards, both indexed by c * num_actions + a.
  std::vector<Row> kernel;
  std::vector<double> reward;

  std::size_t num_classes() const { return classes.size(); }
  const Row& row(std::size_t c, std::size_t a) const { return kernel[c * num_actions + a]; }
  double r(std::size_t c, std::size_t a) const { return reward[c * num_actions + a]; }

  std::size_t class_of(StateId self, std::span<const int> counts) const;
  std::size_t class_of(const MfObservation& obs) const;
  // Sorted population with the class's distinguished state.
  MfObservation representative(std::size_t c) const;

  std::map<std::vector<int>, std::size_t> index;
};

// Number of (s, M) classes: |S| times the multisets of the other N - 1 agents.
double quotient_class_count(int num_agents, int num_states);

// Exhaustive expectation over the per-agent transitions. Rejects instances
// with more than `max_classes` classes.
QuotientMDP build_quotient(const MeanFieldEnv& env, std::size_t max_classes = 100000);

// Class-level action distribution, indexed c * |A| + a.
using ClassPolicy = std::vector<double>;

ClassPolicy uniform_class_policy(const QuotientMDP& q);
ClassPolicy deterministic_class_policy(const QuotientMDP& q, std::span<const std::size_t> actions);

struct QTable {
  std::size_t num_actions = 0;
  std::vector<double> values;

  double at(std::size_t c, std::size_t a) const { return values[c * num_actions + a]; }
};

// V^pi = (1 - gamma) r_pi + gamma P_pi V^pi, solved densely for small class
// counts and iterated to a 1e-12 residual otherwise.
std::vector<double> exact_v(const QuotientMDP& q, const ClassPolicy& policy);
// Q^pi = (1 - gamma) r + gamma P V^pi.
QTable exact_q(const QuotientMDP& q, const ClassPolicy& policy);

struct OptimalValue {
  std::vector<double> v;
  QTable q;
  std::vector<std::size_t> greedy;
  // Sup-norm change of each value-iteration sweep.
  std::vector<double> history;
};

OptimalValue optimal_value(const QuotientMDP& q, double tol);

// Law of the distinguished-agent class at reset: agents i.i.d. from the
// environment's reset marginal, perspective agent uniform.
std::vector<double> reset_distribution(const QuotientMDP& q, const MeanFieldEnv& env);
// dist * P_pi^steps
std::vector<double> propagate(const QuotientMDP& q, const ClassPolicy& policy,
                              std::vector<double> dist, int steps);
// argmax_p <q, p> - upsilon * KL(p || prev) over the simplex, solved by
// bisection on the normalization multiplier with an inner bisection on each
// coordinate's stationarity condition. Does not use the closed form.
std::vector<double> kl_regularized_argmax(std::span<const double> q_values,
                                          std::span<const double> prev, double upsilon);

}  // namespace mfppo

#endif  // MFPPO_ORACLE_HPP
