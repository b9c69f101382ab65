#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "mfppo/error.hpp"
#include "mfppo/mf_core.hpp"
#include "mfppo/oracle.hpp"
#include "mfppo/policy.hpp"
#include "mfppo/symmetry.hpp"

using namespace mfppo;

TEST_CASE("empirical distribution counts states") {
  const StateHistogram a = empirical_distribution(JointConfig{{0, 0, 1}}, 2);
  CHECK(a.mass(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(a.mass(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const StateHistogram b = empirical_distribution(JointConfig{{2}}, 3);
  CHECK(b.mass(2) == 1.0);
  CHECK(b.mass(0) == 0.0);

  const StateHistogram c = empirical_distribution(JointConfig{{0, 1, 0, 1}}, 2);
  CHECK(c.mass(0) == 0.5);
  CHECK(c.mass(1) == 0.5);
}

TEST_CASE("empirical distribution rejects degenerate input") {
  CHECK_THROWS_AS(empirical_distribution(JointConfig{}, 2), Error);
  CHECK_THROWS_AS(empirical_distribution(JointConfig{{3}}, 2), Error);
}

TEST_CASE("empirical distribution is permutation invariant") {
  Rng rng = make_stream({11});
  for (int trial = 0; trial < 200; ++trial) {
    JointConfig c;
    for (int i = 0; i < 7; ++i) c.states.push_back(static_cast<StateId>(uniform_index(rng, 4)));
    const Permutation p = Permutation::random(c.size(), rng);
    CHECK(empirical_distribution(apply_permutation(c, p), 4) == empirical_distribution(c, 4));
  }
}

TEST_CASE("identity kernel keeps the configuration and pays the table reward") {
  const MeanFieldEnv env = testenv::identity_env(3, 4);
  Rng rng = make_stream({1});
  const JointConfig c{{0, 2, 2, 1}};
  for (std::size_t a = 0; a < env.num_actions(); ++a) {
    auto [next, r] = env_step(env, c, a, rng);
    CHECK(next == c);
    // masses 1/4, 1/4, 1/2 with per-state reward -0.1 s (action 0) or -0.05 s
    const double per = a == 0 ? 0.1 : 0.05;
    CHECK(r == doctest::Approx(-(0.25 * per + 0.5 * 2 * per)).epsilon(1e-14));
  }
}

TEST_CASE("absorbing kernel moves every agent to the sink") {
  const MeanFieldEnv env = testenv::single_action(2, 3, 0.9, {0, 1, 0, 1}, {0, 0});
  Rng rng = make_stream({2});
  auto [next, r] = env_step(env, JointConfig{{0, 1, 0}}, 0, rng);
  CHECK(next == JointConfig{{1, 1, 1}});
  CHECK(r == 0.0);
}

TEST_CASE("env_step is deterministic for a fixed seed") {
  const MeanFieldEnv env = builtin_env("tab-3-n4");
  const JointConfig c{{0, 1, 2, 0}};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r1 = make_stream({seed});
    Rng r2 = make_stream({seed});
    auto a = env_step(env, c, 1, r1);
    auto b = env_step(env, c, 1, r2);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }
}

TEST_CASE("env_step rejects bad action ids and configurations") {
  const MeanFieldEnv env = builtin_env("tab-3-n4");
  Rng rng = make_stream({3});
  CHECK_THROWS_AS(env_step(env, JointConfig{{0, 1, 2, 0}}, 2, rng), Error);
  CHECK_THROWS_AS(env_step(env, JointConfig{{0, 1, 2}}, 0, rng), Error);
  CHECK_THROWS_AS(env_step(env, JointConfig{{0, 1, 2, 5}}, 0, rng), Error);
}

TEST_CASE("team reward is invariant under agent permutations") {
  const MeanFieldEnv env = make_tabular_env(testenv::crowded_ring_spec(5));
  Rng rng = make_stream({4});
  for (int trial = 0; trial < 200; ++trial) {
    JointConfig c;
    for (int i = 0; i < 5; ++i) c.states.push_back(static_cast<StateId>(uniform_index(rng, 3)));
    const JointConfig p = apply_permutation(c, Permutation::random(5, rng));
    const std::size_t a = uniform_index(rng, env.num_actions());
    CHECK(env.reward(empirical_distribution(c, 3), a) == env.reward(empirical_distribution(p, 3), a));
  }
}

TEST_CASE("constant reward gives value c") {
  const MeanFieldEnv env = testenv::single_action(2, 2, 0.9, {0.5, 0.5, 0.5, 0.5}, {-0.7, -0.7});
  Rng rng = make_stream({5});
  const ActionSelector pick = [](const MfObservation&, Rng&) { return std::size_t{0}; };
  const MfObservation start{0, JointConfig{{0, 1}}};
  const MonteCarloEstimate est = discounted_value_mc(env, pick, start, 0.9, 50, horizon_for(0.9), rng);
  CHECK(est.mean == doctest::Approx(-0.7).epsilon(1e-5));
}

TEST_CASE("gamma zero gives the mean first-step reward") {
  const MeanFieldEnv env = testenv::identity_env(3, 2);
  Rng rng = make_stream({6});
  const ActionSelector pick = [](const MfObservation&, Rng&) { return std::size_t{1}; };
  const MfObservation start{1, JointConfig{{1, 2}}};
  const MonteCarloEstimate est = discounted_value_mc(env, pick, start, 0.0, 10, 1, rng);
  CHECK(est.mean == doctest::Approx(-(0.5 * 0.05 + 0.5 * 0.1)).epsilon(1e-14));
  CHECK_THROWS_AS(discounted_value_mc(env, pick, start, 1.0, 10, 10, rng), Error);
}

TEST_CASE("horizon makes the truncated tail negligible") {
  for (double g : {0.0, 0.5, 0.9, 0.99}) CHECK(std::pow(g, horizon_for(g)) <= 1e-6);
}

TEST_CASE("Monte Carlo value agrees with the linear-system value") {
  const MeanFieldEnv env = builtin_env("tab-3-n4");
  const QuotientMDP q = build_quotient(env);
  const std::vector<double> v = exact_v(q, uniform_class_policy(q));
  const FeatureLayout layout{env.num_states(), static_cast<int>(env.num_actions())};
  const EnergyPolicy uniform = EnergyPolicy::uniform(env.num_actions());
  for (const MfObservation& start :
       {MfObservation{0, JointConfig{{0, 1, 2, 0}}}, MfObservation{2, JointConfig{{2, 2, 2, 1}}}}) {
    Rng rng = make_stream({7, static_cast<std::uint64_t>(start.self_state)});
    const MonteCarloEstimate est =
        discounted_value_mc(env, uniform, layout, start, env.gamma(), 4000, horizon_for(env.gamma()), rng);
    const double target = v[q.class_of(start)];
    CHECK(std::abs(est.mean - target) <= 3.0 * est.std_error + 1e-6);
  }
}
