#include <algorithm>
#include <set>

#include "doctest.h"
#include "mfppo/error.hpp"
#include "mfppo/oracle.hpp"
#include "mfppo/envs.hpp"
#include "mfppo/symmetry.hpp"

using namespace mfppo;

namespace {

// Multisets of size n over s symbols by brute force over all s^n sequences.
std::set<std::vector<StateId>> brute_multisets(int n, int s) {
  std::set<std::vector<StateId>> out;
  std::vector<StateId> seq(static_cast<std::size_t>(n), 0);
  while (true) {
    std::vector<StateId> sorted = seq;
    std::sort(sorted.begin(), sorted.end());
    out.insert(sorted);
    int i = 0;
    while (i < n && ++seq[static_cast<std::size_t>(i)] == s) seq[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }
  return out;
}

}  // namespace

TEST_CASE("apply_permutation") {
  const JointConfig c{{0, 1}};
  CHECK(apply_permutation(c, Permutation::identity(2)) == c);
  CHECK(apply_permutation(c, Permutation({1, 0})) == JointConfig{{1, 0}});
  const JointConfig d{{3, 1, 4, 1, 5}};
  const Permutation inv({4, 1, 2, 3, 0});
  CHECK(apply_permutation(apply_permutation(d, inv), inv) == d);
  CHECK(apply_permutation(d, Permutation({2, 0, 1, 4, 3})) == JointConfig{{4, 3, 1, 5, 1}});
  CHECK_THROWS_AS(apply_permutation(c, Permutation::identity(3)), Error);
  CHECK_THROWS_AS(Permutation({0, 0}), Error);
}

TEST_CASE("class and table counts") {
  CHECK(class_count(2, 2) == 3);
  CHECK(count_invariant_table_size(2, 2, 2) == 12);
  CHECK(class_count(3, 2) == 4);
  for (int k = 1; k <= 6; ++k) CHECK(class_count(1, k) == k);
  CHECK_THROWS_AS(count_invariant_table_size(0, 2, 2), Error);
  CHECK_THROWS_AS(count_invariant_table_size(2, -1, 2), Error);
  CHECK_THROWS_AS(count_invariant_table_size(2, 2, 0), Error);
}

TEST_CASE("class count equals brute-force multiset count") {
  for (int n = 1; n <= 6; ++n) {
    for (int s = 1; s <= 4; ++s) {
      const auto brute = brute_multisets(n, s);
      CHECK(class_count(n, s) == BigInt(brute.size()));
      CHECK(count_invariant_table_size(n, s, 3) == BigInt(brute.size()) * s * 3);
    }
  }
}

TEST_CASE("class count is polynomial in N") {
  for (int n = 1; n <= 64; ++n) {
    for (int s = 1; s <= 3; ++s) {
      BigInt bound = 1;
      for (int i = 0; i < s; ++i) bound *= n + 1;
      CHECK(class_count(n, s) <= bound);
    }
  }
  // Stays exact beyond 64-bit range.
  CHECK(class_count(200, 40) > BigInt(1) << 64);
}

TEST_CASE("enumerate_classes") {
  const auto two = enumerate_classes(2, 2);
  REQUIRE(two.size() == 3);
  CHECK(two[0] == JointConfig{{0, 0}});
  CHECK(two[1] == JointConfig{{0, 1}});
  CHECK(two[2] == JointConfig{{1, 1}});
  const auto single = enumerate_classes(1, 3);
  REQUIRE(single.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(single[static_cast<std::size_t>(i)] == JointConfig{{i}});
  const auto one_state = enumerate_classes(3, 1);
  REQUIRE(one_state.size() == 1);
  CHECK(one_state[0] == JointConfig{{0, 0, 0}});
  for (const auto& c : enumerate_classes(4, 3)) CHECK(std::is_sorted(c.states.begin(), c.states.end()));
  CHECK_THROWS_AS(enumerate_classes(30, 4), Error);
}

TEST_CASE("invariance audit") {
  const MeanFieldEnv env = builtin_env("tab-3-n4");
  Rng rng = make_stream({21});
  const QuotientMDP q = build_quotient(env);
  const QTable table = exact_q(q, uniform_class_policy(q));
  const ObservationFunction oracle = [&](const MfObservation& obs, std::size_t a) {
    return table.at(q.class_of(obs), a);
  };
  const InvarianceReport ok = audit_invariance(env, oracle, 500, 1e-9, rng);
  CHECK(ok.pass);
  CHECK(ok.max_violation == 0.0);

  const ObservationFunction positional = [](const MfObservation& obs, std::size_t) {
    double v = 0.0;
    for (std::size_t i = 0; i < obs.population.size(); ++i) v += (i + 1.0) * obs.population[i];
    return v;
  };
  CHECK_FALSE(audit_invariance(env, positional, 500, 1e-9, rng).pass);
}
