#include "mfppo/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "mfppo/error.hpp"

namespace mfppo {

namespace {

constexpr std::size_t kDenseLimit = 1500;

std::vector<int> make_key(StateId self, std::span<const int> counts) {
  std::vector<int> key;
  key.reserve(counts.size() + 1);
  key.push_back(self);
  key.insert(key.end(), counts.begin(), counts.end());
  return key;
}

// All count vectors of length s_card summing to n, lexicographically
// decreasing in the first coordinate.
void for_each_composition(int n, int s_card, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> c(static_cast<std::size_t>(s_card), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == s_card - 1) {
      c[static_cast<std::size_t>(pos)] = left;
      f(c);
      return;
    }
    for (int v = left; v >= 0; --v) {
      c[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, n);
}

}  // namespace

double quotient_class_count(int num_agents, int num_states) {
  require(num_agents >= 1 && num_states >= 1, ErrorCode::kInvalidArgument,
          "arguments must be >= 1");
  // C(N - 1 + S - 1, N - 1)
  const int n = num_agents - 1;
  const int k = num_states - 1;
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n + i) / i;
  return std::round(c) * num_states;
}

std::size_t QuotientMDP::class_of(StateId self, std::span<const int> counts) const {
  const auto it = index.find(make_key(self, counts));
  require(it != index.end(), ErrorCode::kInvalidArgument, "configuration is not a valid class");
  return it->second;
}

std::size_t QuotientMDP::class_of(const MfObservation& obs) const {
  std::vector<int> counts(static_cast<std::size_t>(num_states), 0);
  require(obs.population.size() == static_cast<std::size_t>(num_agents),
          ErrorCode::kInvalidArgument, "configuration length does not match N");
  for (StateId s : obs.population.states) {
    require(s >= 0 && s < num_states, ErrorCode::kOutOfRange, "state id out of range");
    ++counts[static_cast<std::size_t>(s)];
  }
  return class_of(obs.self_state, counts);
}

MfObservation QuotientMDP::representative(std::size_t c) const {
  const QuotientClass& cls = classes.at(c);
  MfObservation obs;
  obs.self_state = cls.self;
  for (int x = 0; x < num_states; ++x)
    for (int i = 0; i < cls.counts[static_cast<std::size_t>(x)]; ++i)
      obs.population.states.push_back(x);
  return obs;
}

QuotientMDP build_quotient(const MeanFieldEnv& env, std::size_t max_classes) {
  const int s_card = env.num_states();
  const int n = env.num_agents();
  require(quotient_class_count(n, s_card) <= static_cast<double>(max_classes),
          ErrorCode::kTooLarge, "instance too large for the quotient oracle");

  QuotientMDP q;
  q.num_states = s_card;
  q.num_agents = n;
  q.num_actions = env.num_actions();
  q.gamma = env.gamma();
  q.reward_bound = env.reward_bound();

  for (StateId s = 0; s < s_card; ++s) {
    for_each_composition(n - 1, s_card, [&](const std::vector<int>& rest) {
      QuotientClass cls{s, rest};
      ++cls.counts[static_cast<std::size_t>(s)];
      q.index.emplace(make_key(s, cls.counts), q.classes.size());
      q.classes.push_back(std::move(cls));
    });
  }

  const std::size_t na = q.num_actions;
  q.kernel.resize(q.classes.size() * na);
  q.reward.resize(q.classes.size() * na);
  std::vector<KernelOutcome> outcomes;
  for (std::size_t c = 0; c < q.classes.size(); ++c) {
    const QuotientClass& cls = q.classes[c];
    const StateHistogram hist(cls.counts);
    for (std::size_t a = 0; a < na; ++a) {
      const LocalActionMap& abar = env.action(a);
      q.reward[c * na + a] = env.reward(hist, a);

      // Distribution of the other N - 1 agents' next counts, one agent at a time.
      std::map<std::vector<int>, double> rest{{std::vector<int>(static_cast<std::size_t>(s_card), 0), 1.0}};
      for (StateId x = 0; x < s_card; ++x) {
        const int others = cls.counts[static_cast<std::size_t>(x)] - (x == cls.self ? 1 : 0);
        if (others == 0) continue;
        outcomes.clear();
        env.kernel(x, hist, abar(x), outcomes);
        for (int i = 0; i < others; ++i) {
          std::map<std::vector<int>, double> next;
          for (const auto& [counts, p] : rest) {
            for (const auto& o : outcomes) {
              if (o.prob == 0.0) continue;
              std::vector<int> c2 = counts;
              ++c2[static_cast<std::size_t>(o.next)];
              next[c2] += p * o.prob;
            }
          }
          rest = std::move(next);
        }
      }
      outcomes.clear();
      env.kernel(cls.self, hist, abar(cls.self), outcomes);
      std::map<std::size_t, double> row;
      double total = 0.0;
      for (const auto& o : outcomes) {
        if (o.prob == 0.0) continue;
        for (const auto& [counts, p] : rest) {
          std::vector<int> c2 = counts;
          ++c2[static_cast<std::size_t>(o.next)];
          row[q.class_of(o.next, c2)] += p * o.prob;
          total += p * o.prob;
        }
      }
      require(std::abs(total - 1.0) <= 1e-10, ErrorCode::kNumeric,
              "kernel row does not sum to 1");
      q.kernel[c * na + a].assign(row.begin(), row.end());
    }
  }
  return q;
}

ClassPolicy uniform_class_policy(const QuotientMDP& q) {
  return ClassPolicy(q.num_classes() * q.num_actions, 1.0 / static_cast<double>(q.num_actions));
}

ClassPolicy deterministic_class_policy(const QuotientMDP& q, std::span<const std::size_t> actions) {
  require(actions.size() == q.num_classes(), ErrorCode::kInvalidArgument,
          "one action per class required");
  ClassPolicy p(q.num_classes() * q.num_actions, 0.0);
  for (std::size_t c = 0; c < actions.size(); ++c) {
    require(actions[c] < q.num_actions, ErrorCode::kOutOfRange, "action id out of range");
    p[c * q.num_actions + actions[c]] = 1.0;
  }
  return p;
}

namespace {

void check_policy(const QuotientMDP& q, const ClassPolicy& policy) {
  require(policy.size() == q.num_classes() * q.num_actions, ErrorCode::kInvalidArgument,
          "class policy has the wrong size");
}

}  // namespace

std::vector<double> exact_v(const QuotientMDP& q, const ClassPolicy& policy) {
  require(q.gamma < 1.0, ErrorCode::kInvalidArgument, "gamma must be < 1");
  check_policy(q, policy);
  const std::size_t nc = q.num_classes();
  const std::size_t na = q.num_actions;
  const double g = q.gamma;

  std::vector<double> r_pi(nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t a = 0; a < na; ++a) r_pi[c] += policy[c * na + a] * q.r(c, a);

  if (nc <= kDenseLimit) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(nc),
                                                  static_cast<Eigen::Index>(nc));
    Eigen::VectorXd b(static_cast<Eigen::Index>(nc));
    for (std::size_t c = 0; c < nc; ++c) {
      b(static_cast<Eigen::Index>(c)) = (1.0 - g) * r_pi[c];
      for (std::size_t a = 0; a < na; ++a) {
        const double pa = policy[c * na + a];
        if (pa == 0.0) continue;
        for (const auto& [c2, p] : q.row(c, a))
          m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c2)) -= g * pa * p;
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    Eigen::VectorXd v = lu.solve(b);
    require(v.allFinite(), ErrorCode::kNumeric, "singular policy-evaluation system");
    return std::vector<double>(v.data(), v.data() + v.size());
  }

  std::vector<double> v(nc, 0.0);
  std::vector<double> next(nc);
  for (int it = 0; it < 1000000; ++it) {
    double resid = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      double acc = 0.0;
      for (std::size_t a = 0; a < na; ++a) {
        const double pa = policy[c * na + a];
        if (pa == 0.0) continue;
        double e = 0.0;
        for (const auto& [c2, p] : q.row(c, a)) e += p * v[c2];
        acc += pa * e;
      }
      next[c] = (1.0 - g) * r_pi[c] + g * acc;
      resid = std::max(resid, std::abs(next[c] - v[c]));
    }
    v.swap(next);
    if (resid <= 1e-12) return v;
  }
  fail(ErrorCode::kNumeric, "policy evaluation did not converge");
}

QTable exact_q(const QuotientMDP& q, const ClassPolicy& policy) {
  const std::vector<double> v = exact_v(q, policy);
  QTable t;
  t.num_actions = q.num_actions;
  t.values.resize(q.num_classes() * q.num_actions);
  for (std::size_t c = 0; c < q.num_classes(); ++c) {
    for (std::size_t a = 0; a < q.num_actions; ++a) {
      double e = 0.0;
      for (const auto& [c2, p] : q.row(c, a)) e += p * v[c2];
      t.values[c * q.num_actions + a] = (1.0 - q.gamma) * q.r(c, a) + q.gamma * e;
    }
  }
  return t;
}

OptimalValue optimal_value(const QuotientMDP& q, double tol) {
  require(tol > 0.0, ErrorCode::kInvalidArgument, "tolerance must be positive");
  const std::size_t nc = q.num_classes();
  const std::size_t na = q.num_actions;
  const double g = q.gamma;
  OptimalValue out;
  out.v.assign(nc, 0.0);
  out.greedy.assign(nc, 0);
  out.q.num_actions = na;
  out.q.values.assign(nc * na, 0.0);
  const double stop = g > 0.0 ? tol * (1.0 - g) / g : std::numeric_limits<double>::infinity();
  std::vector<double> next(nc);
  while (true) {
    double diff = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < na; ++a) {
        double e = 0.0;
        for (const auto& [c2, p] : q.row(c, a)) e += p * out.v[c2];
        const double qa = (1.0 - g) * q.r(c, a) + g * e;
        out.q.values[c * na + a] = qa;
        if (qa > best) {
          best = qa;
          out.greedy[c] = a;
        }
      }
      next[c] = best;
      diff = std::max(diff, std::abs(next[c] - out.v[c]));
    }
    out.v.swap(next);
    out.history.push_back(diff);
    if (diff <= stop) break;
  }
  // Q* and the greedy choice consistent with the returned V*.
  for (std::size_t c = 0; c < nc; ++c) {
    std::size_t best = 0;
    for (std::size_t a = 0; a < na; ++a) {
      double e = 0.0;
      for (const auto& [c2, p] : q.row(c, a)) e += p * out.v[c2];
      out.q.values[c * na + a] = (1.0 - g) * q.r(c, a) + g * e;
      if (out.q.values[c * na + a] > out.q.values[c * na + best]) best = a;
    }
    out.greedy[c] = best;
  }
  return out;
}

std::vector<double> reset_distribution(const QuotientMDP& q, const MeanFieldEnv& env) {
  const std::vector<double>& marginal = env.reset_marginal();
  require(!marginal.empty(), ErrorCode::kInvalidArgument,
          "environment has no i.i.d. reset marginal");
  require(marginal.size() == static_cast<std::size_t>(q.num_states), ErrorCode::kInvalidArgument,
          "environment does not match the quotient");
  std::vector<double> dist(q.num_classes(), 0.0);
  const double n = q.num_agents;
  for (std::size_t c = 0; c < q.num_classes(); ++c) {
    const QuotientClass& cls = q.classes[c];
    double logp = std::lgamma(n + 1.0);
    bool zero = false;
    for (int x = 0; x < q.num_states; ++x) {
      const int k = cls.counts[static_cast<std::size_t>(x)];
      if (k == 0) continue;
      const double px = marginal[static_cast<std::size_t>(x)];
      if (px == 0.0) {
        zero = true;
        break;
      }
      logp += k * std::log(px) - std::lgamma(k + 1.0);
    }
    if (zero) continue;
    dist[c] = std::exp(logp) * cls.counts[static_cast<std::size_t>(cls.self)] / n;
  }
  return dist;
}

std::vector<double> propagate(const QuotientMDP& q, const ClassPolicy& policy,
                              std::vector<double> dist, int steps) {
  check_policy(q, policy);
  require(dist.size() == q.num_classes(), ErrorCode::kInvalidArgument,
          "distribution has the wrong size");
  const std::size_t na = q.num_actions;
  std::vector<double> next(dist.size());
  for (int t = 0; t < steps; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t c = 0; c < dist.size(); ++c) {
      if (dist[c] == 0.0) continue;
      for (std::size_t a = 0; a < na; ++a) {
        const double w = dist[c] * policy[c * na + a];
        if (w == 0.0) continue;
        for (const auto& [c2, p] : q.row(c, a)) next[c2] += w * p;
      }
    }
    dist.swap(next);
  }
  return dist;
}

namespace {

// argmax over p in [0, 1] of (q - lambda) p - upsilon p log(p / prev), via
// bisection on log p of the decreasing stationarity condition.
double coordinate_argmax(double q, double prev, double lambda, double upsilon) {
  auto slope = [&](double log_p) {
    return (q - lambda) - upsilon * (log_p - std::log(prev) + 1.0);
  };
  if (slope(0.0) >= 0.0) return 1.0;
  double lo = -745.0;
  if (slope(lo) <= 0.0) return 0.0;
  double hi = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace

std::vector<double> kl_regularized_argmax(std::span<const double> q_values,
                                          std::span<const double> prev, double upsilon) {
  require(upsilon > 0.0, ErrorCode::kInvalidArgument, "upsilon must be positive");
  require(!q_values.empty() && q_values.size() == prev.size(), ErrorCode::kInvalidArgument,
          "q and prev must have the same nonzero length");
  for (double p : prev) require(p > 0.0, ErrorCode::kInvalidArgument, "prev must be positive");
  const std::size_t n = q_values.size();
  std::vector<double> p(n);
  auto mass = [&](double lambda) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = coordinate_argmax(q_values[i], prev[i], lambda, upsilon);
      s += p[i];
    }
    return s;
  };
  // mass(lambda) is nonincreasing; bracket the root of mass = 1.
  const double qmax = *std::max_element(q_values.begin(), q_values.end());
  double lo = qmax - 1.0;
  double hi = qmax + 1.0;
  double step = 1.0;
  while (mass(lo) < 1.0) {
    step *= 2.0;
    lo -= step;
  }
  step = 1.0;
  while (mass(hi) > 1.0) {
    step *= 2.0;
    hi += step;
  }
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (mass(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  const double s = mass(0.5 * (lo + hi));
  require(s > 0.0, ErrorCode::kNumeric, "KL-regularized solver lost all mass");
  for (double& v : p) v /= s;
  return p;
}

}  // namespace mfppo
