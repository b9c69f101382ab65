#include "mfppo/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "mfppo/deepset_net.hpp"
#include "mfppo/envs.hpp"
#include "mfppo/error.hpp"
#include "mfppo/policy.hpp"
#include "mfppo/symmetry.hpp"

namespace mfppo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// Random observation: population i.i.d. uniform, self drawn from it.
MfObservation random_obs(int num_states, int n, Rng& rng) {
  MfObservation obs;
  obs.population.states.resize(static_cast<std::size_t>(n));
  for (auto& s : obs.population.states)
    s = static_cast<StateId>(uniform_index(rng, static_cast<std::size_t>(num_states)));
  obs.self_state = obs.population[uniform_index(rng, static_cast<std::size_t>(n))];
  return obs;
}

// Moves alpha to a uniformly random direction at distance `dist` from alpha0.
void perturb(TwoLayerWeights& w, double dist, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> dir(w.alpha.size());
  double norm = 0.0;
  for (double& v : dir) {
    v = normal(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (std::size_t i = 0; i < dir.size(); ++i) w.alpha[i] = w.alpha0[i] + dist * dir[i] / norm;
}

}  // namespace

double median(std::vector<double> v) {
  require(!v.empty(), ErrorCode::kInvalidArgument, "median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CheckReport check_invariance(std::uint64_t seed, int cases) {
  const auto t0 = Clock::now();
  Rng rng = make_stream({seed, 0x696e76u});
  double deepset_max = 0.0;
  double mlp_max = 0.0;
  std::ostringstream csv;
  csv << "case,num_states,num_actions,num_agents,deepset_violation,mlp_violation\n";
  for (int c = 0; c < cases; ++c) {
    const int ns = 2 + static_cast<int>(uniform_index(rng, 5));
    const int na = 2 + static_cast<int>(uniform_index(rng, 4));
    const int n = 2 + static_cast<int>(uniform_index(rng, 7));
    const std::size_t m = 32;
    const FeatureLayout layout{ns, na};
    const MlpLayout mlp_layout{ns, na, n};
    DeepSetParams ds = init_params(m, layout.dim(), 2.0, rng);
    perturb(ds, 1.0, rng);
    MlpParams mlp = init_mlp_params(m, mlp_layout.dim(), 2.0, rng);
    perturb(mlp, 1.0, rng);
    MfObservation obs = random_obs(ns, n, rng);
    // Force at least two distinct states so the negative control can fire.
    obs.population.states[0] = 0;
    obs.population.states[1] = 1;
    const std::size_t a = uniform_index(rng, static_cast<std::size_t>(na));
    const Permutation perm = Permutation::random(static_cast<std::size_t>(n), rng);
    const MfObservation permuted{obs.self_state, apply_permutation(obs.population, perm)};
    const double dv = std::abs(forward(ds, obs, a, layout) - forward(ds, permuted, a, layout));
    const double mv =
        std::abs(mlp_forward(mlp, obs, a, mlp_layout) - mlp_forward(mlp, permuted, a, mlp_layout));
    deepset_max = std::max(deepset_max, dv);
    mlp_max = std::max(mlp_max, mv);
    csv << c << ',' << ns << ',' << na << ',' << n << ',' << dv << ',' << mv << '\n';
  }
  CheckReport r;
  r.suite = "invariance";
  r.pass = deepset_max <= 1e-9 && mlp_max > 1e-9;
  r.summary = std::to_string(cases) + " cases: DeepSet max violation " + fmt(deepset_max) +
              " (<= 1e-9), MLP max violation " + fmt(mlp_max) + " (negative control, > 1e-9)";
  r.csv = csv.str();
  r.seconds = seconds_since(t0);
  return r;
}

namespace {

// Central difference along a random unit direction; the point is skipped if
// the step could cross a ReLU kink.
bool gradient_point(const TwoLayerWeights& w, const SparseInput& x, Rng& rng, double* rel) {
  const double h = 1e-5;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> dir(w.alpha.size());
  double norm = 0.0;
  for (double& v : dir) {
    v = normal(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : dir) v /= norm;

  for (const auto& g : x.groups) {
    for (std::size_t j = 0; j < w.m; ++j) {
      double pre = 0.0;
      double dpre = 0.0;
      for (std::uint32_t k : g.indices) {
        pre += w.alpha[k * w.m + j];
        dpre += dir[k * w.m + j];
      }
      if (std::abs(pre) <= 4.0 * h * std::abs(dpre) + 1e-12) return false;
    }
  }
  std::vector<double> grad(w.alpha.size(), 0.0);
  add_scaled_gradient(w, x, 1.0, grad);
  double analytic = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) analytic += grad[i] * dir[i];
  TwoLayerWeights plus = w;
  TwoLayerWeights minus = w;
  for (std::size_t i = 0; i < dir.size(); ++i) {
    plus.alpha[i] += h * dir[i];
    minus.alpha[i] -= h * dir[i];
  }
  const double fd = (forward(plus, x) - forward(minus, x)) / (2.0 * h);
  *rel = std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-8});
  return true;
}

}  // namespace

CheckReport check_gradients(std::uint64_t seed, int points) {
  const auto t0 = Clock::now();
  Rng rng = make_stream({seed, 0x677261u});
  std::ostringstream csv;
  csv << "net,point,relative_error\n";
  double worst[2] = {0.0, 0.0};
  int counted[2] = {0, 0};
  const char* names[2] = {"deepset", "mlp"};
  for (int net = 0; net < 2; ++net) {
    int attempts = 0;
    while (counted[net] < points) {
      require(++attempts < 100 * points, ErrorCode::kNumeric, "too many kink points");
      const int ns = 2 + static_cast<int>(uniform_index(rng, 4));
      const int na = 2 + static_cast<int>(uniform_index(rng, 3));
      const int n = 2 + static_cast<int>(uniform_index(rng, 4));
      const MfObservation obs = random_obs(ns, n, rng);
      const std::size_t a = uniform_index(rng, static_cast<std::size_t>(na));
      TwoLayerWeights w;
      SparseInput x;
      if (net == 0) {
        const FeatureLayout layout{ns, na};
        w = init_params(16, layout.dim(), 2.0, rng);
        x = deepset_input(obs, a, layout);
      } else {
        const MlpLayout layout{ns, na, n};
        w = init_mlp_params(16, layout.dim(), 2.0, rng);
        x = mlp_input(obs, a, layout);
      }
      perturb(w, 1.0, rng);
      double rel = 0.0;
      if (!gradient_point(w, x, rng, &rel)) continue;
      worst[net] = std::max(worst[net], rel);
      csv << names[net] << ',' << counted[net] << ',' << rel << '\n';
      ++counted[net];
    }
  }
  CheckReport r;
  r.suite = "gradients";
  r.pass = worst[0] <= 1e-4 && worst[1] <= 1e-4;
  r.summary = std::to_string(points) + " non-kink points per net: max relative error DeepSet " +
              fmt(worst[0]) + ", MLP " + fmt(worst[1]) + " (<= 1e-4)";
  r.csv = csv.str();
  r.seconds = seconds_since(t0);
  return r;
}

CheckReport check_counting() {
  const auto t0 = Clock::now();
  std::ostringstream csv;
  csv << "kind,N,S,formula,reference,agree\n";
  bool ok = true;
  for (int n = 1; n <= 6; ++n) {
    for (int s = 1; s <= 4; ++s) {
      const BigInt formula = class_count(n, s);
      const std::size_t enumerated = enumerate_classes(n, s).size();
      const bool agree = formula == BigInt(enumerated);
      ok = ok && agree;
      csv << "enumeration," << n << ',' << s << ',' << formula << ',' << enumerated << ','
          << (agree ? "yes" : "no") << '\n';
    }
  }
  for (int n = 1; n <= 64; ++n) {
    for (int s = 1; s <= 3; ++s) {
      const BigInt formula = class_count(n, s);
      BigInt bound = 1;
      for (int i = 0; i < s; ++i) bound *= (n + 1);
      const bool agree = formula <= bound;
      ok = ok && agree;
      csv << "bound," << n << ',' << s << ',' << formula << ',' << bound << ','
          << (agree ? "yes" : "no") << '\n';
    }
  }
  CheckReport r;
  r.suite = "counting";
  r.pass = ok;
  r.summary = std::string("formula == enumeration for N <= 6, |S| <= 4 and <= (N+1)^|S| for ") +
              "N <= 64, |S| <= 3: " + (ok ? "yes" : "no");
  r.csv = csv.str();
  r.seconds = seconds_since(t0);
  return r;
}

CheckReport check_prop4(std::uint64_t seed, int triples) {
  const auto t0 = Clock::now();
  Rng rng = make_stream({seed, 0x70726fu});
  std::ostringstream csv;
  csv << "triple,num_actions,upsilon,tv\n";
  double worst = 0.0;
  for (int i = 0; i < triples; ++i) {
    const std::size_t n = 2 + uniform_index(rng, 7);
    std::vector<double> q(n);
    std::vector<double> prev(n);
    double z = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      q[a] = 2.0 * uniform01(rng) - 1.0;
      prev[a] = 0.05 + uniform01(rng);
      z += prev[a];
    }
    for (double& p : prev) p /= z;
    const double upsilon = std::exp(std::log(0.05) + uniform01(rng) * std::log(100.0));
    const std::vector<double> numeric = kl_regularized_argmax(q, prev, upsilon);
    std::vector<double> logits(n);
    for (std::size_t a = 0; a < n; ++a) logits[a] = std::log(prev[a]) + q[a] / upsilon;
    const std::vector<double> closed = softmax(logits);
    const double tv = total_variation(numeric, closed);
    worst = std::max(worst, tv);
    csv << i << ',' << n << ',' << upsilon << ',' << tv << '\n';
  }
  CheckReport r;
  r.suite = "prop4";
  r.pass = worst <= 1e-6;
  r.summary = std::to_string(triples) + " random triples: max TV between the numeric maximizer " +
              "and prev * exp(Q / upsilon) is " + fmt(worst) + " (<= 1e-6)";
  r.csv = csv.str();
  r.seconds = seconds_since(t0);
  return r;
}

CheckReport check_td_oracle(std::uint64_t seed, const TdOracleOptions& opt) {
  const auto t0 = Clock::now();
  const MeanFieldEnv env = builtin_env(opt.env);
  const QuotientMDP q = build_quotient(env);
  const ClassPolicy uniform = uniform_class_policy(q);
  const QTable exact = exact_q(q, uniform);
  TrainSchedule sched;
  const int burn_in = sched.effective_burn_in(env.gamma());
  const std::vector<double> nu = propagate(q, uniform, reset_distribution(q, env), burn_in);
  const EnergyPolicy pi0 = EnergyPolicy::uniform(env.num_actions());
  const FeatureLayout layout{env.num_states(), static_cast<int>(env.num_actions())};

  std::ostringstream csv;
  csv << "seed,rmse,mean_bias,td_loss\n";
  std::vector<double> rmses;
  for (int s = 0; s < opt.seeds; ++s) {
    const std::uint64_t run_seed = seed + static_cast<std::uint64_t>(s);
    Rng init = make_stream({run_seed, 0x696e6974u});
    Critic critic = make_critic(env, NetKind::kDeepSet, opt.m, opt.radius, init);
    const auto samples = generate_samples(env, pi0, layout, burn_in, opt.T, false, run_seed, 0, 0);
    const InnerResult res = td_policy_evaluation(env, samples, critic);
    const QTable learned = lift_critic(critic, q);
    double se = 0.0;
    double bias = 0.0;
    for (std::size_t c = 0; c < q.num_classes(); ++c) {
      for (std::size_t a = 0; a < q.num_actions; ++a) {
        const double w = nu[c] * uniform[c * q.num_actions + a];
        const double d = learned.at(c, a) - exact.at(c, a);
        se += w * d * d;
        bias += w * d;
      }
    }
    rmses.push_back(std::sqrt(se));
    csv << run_seed << ',' << std::sqrt(se) << ',' << bias << ',' << res.mean_loss << '\n';
  }
  const double med = median(rmses);
  CheckReport r;
  r.suite = "td-oracle";
  r.pass = med <= opt.tolerance;
  r.summary = opt.env + ", m=" + std::to_string(opt.m) + ", T=" + std::to_string(opt.T) +
              ": median sigma-weighted RMSE vs exact Q " + fmt(med) + " (<= " +
              fmt(opt.tolerance) + ")";
  r.csv = csv.str();
  r.seconds = seconds_since(t0);
  return r;
}

CheckReport check_linearization(std::uint64_t seed, int seeds, double radius) {
  const auto t0 = Clock::now();
  const FeatureLayout layout{9, 6};
  const std::size_t widths[3] = {64, 256, 1024};
  const int inputs = 200;
  std::ostringstream csv;
  csv << "m,seed,mean_sq_gap\n";
  double medians[3];
  for (int wi = 0; wi < 3; ++wi) {
    std::vector<double> gaps;
    for (int s = 0; s < seeds; ++s) {
      Rng rng = make_stream({seed, 0x6c696eu, static_cast<std::uint64_t>(s), widths[wi]});
      DeepSetParams p = init_params(widths[wi], layout.dim(), radius, rng);
      perturb(p, radius, rng);
      // Same inputs for every width.
      Rng in_rng = make_stream({seed, 0x6c696eu, static_cast<std::uint64_t>(s)});
      double acc = 0.0;
      for (int i = 0; i < inputs; ++i) {
        const MfObservation obs = random_obs(layout.num_states, 4, in_rng);
        const std::size_t a = uniform_index(in_rng, static_cast<std::size_t>(layout.num_actions));
        const double d = forward(p, obs, a, layout) - forward_linearized(p, obs, a, layout);
        acc += d * d;
      }
      gaps.push_back(acc / inputs);
      csv << widths[wi] << ',' << s << ',' << acc / inputs << '\n';
    }
    medians[wi] = median(gaps);
  }
  CheckReport r;
  r.suite = "linearization";
  r.pass = medians[1] <= medians[0] && medians[2] <= medians[1];
  r.summary = "median mean |F - F0|^2 at ||alpha - alpha0|| = " + fmt(radius) + ": m=64 " +
              fmt(medians[0]) + ", m=256 " + fmt(medians[1]) + ", m=1024 " + fmt(medians[2]) +
              " (nonincreasing)";
  r.csv = csv.str();
  r.seconds = seconds_since(t0);
  return r;
}

const std::vector<std::string>& check_suite_names() {
  static const std::vector<std::string> names = {"invariance", "gradients",    "counting",
                                                 "prop4",      "td-oracle",    "linearization"};
  return names;
}

std::vector<CheckReport> run_check_suite(const std::string& name, std::uint64_t seed) {
  if (name == "all") {
    std::vector<CheckReport> out;
    for (const auto& n : check_suite_names()) out.push_back(run_check_suite(n, seed).front());
    return out;
  }
  if (name == "invariance") return {check_invariance(seed)};
  if (name == "gradients") return {check_gradients(seed)};
  if (name == "counting") return {check_counting()};
  if (name == "prop4") return {check_prop4(seed)};
  if (name == "td-oracle") return {check_td_oracle(seed)};
  if (name == "linearization") return {check_linearization(seed)};
  fail(ErrorCode::kInvalidArgument, "unknown check suite '" + name + "'");
}

GapOracle make_gap_oracle(const MeanFieldEnv& env, int burn_in) {
  GapOracle g;
  g.q = build_quotient(env);
  g.opt = optimal_value(g.q, 1e-12);
  const ClassPolicy star = deterministic_class_policy(g.q, g.opt.greedy);
  g.nu_star = propagate(g.q, star, reset_distribution(g.q, env), burn_in);
  for (std::size_t c = 0; c < g.q.num_classes(); ++c) g.l_star += g.nu_star[c] * g.opt.v[c];
  return g;
}

double optimality_gap(const GapOracle& oracle, const ClassPolicy& policy) {
  const std::vector<double> v = exact_v(oracle.q, policy);
  double l = 0.0;
  for (std::size_t c = 0; c < v.size(); ++c) l += oracle.nu_star[c] * v[c];
  require(oracle.l_star != 0.0, ErrorCode::kNumeric, "optimal value is zero; relative gap undefined");
  return (oracle.l_star - l) / std::abs(oracle.l_star);
}

}  // namespace mfppo
