#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "mfppo/deepset_net.hpp"
#include "mfppo/error.hpp"
#include "mfppo/symmetry.hpp"

using namespace mfppo;

namespace {

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

MfObservation random_obs(int n, int s, Rng& rng) {
  MfObservation o;
  for (int i = 0; i < n; ++i) o.population.states.push_back(static_cast<StateId>(uniform_index(rng, s)));
  o.self_state = o.population[uniform_index(rng, static_cast<std::size_t>(n))];
  return o;
}

// Direct double sum over units and population members, no grouping.
double naive_forward(const TwoLayerWeights& w, const MfObservation& obs, std::size_t a,
                     const FeatureLayout& layout) {
  const double n = static_cast<double>(obs.population.size());
  double total = 0.0;
  for (StateId peer : obs.population.states) {
    const FeatureVector x = encode_features(obs.self_state, peer, a, layout);
    for (std::size_t j = 0; j < w.m; ++j) {
      double pre = 0.0;
      for (std::size_t k = 0; k < w.d; ++k) pre += w.alpha[k * w.m + j] * x.coords[k];
      total += w.u[j] * std::max(0.0, pre);
    }
  }
  return total / (std::sqrt(static_cast<double>(w.m)) * n);
}

}  // namespace

TEST_CASE("feature encoding has unit norm and is injective") {
  const FeatureLayout layout{2, 2};
  const FeatureVector x = encode_features(0, 0, 0, layout);
  REQUIRE(x.coords.size() == 6);
  CHECK(x.coords[0] == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(x.coords[2] == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(x.coords[4] == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(norm(x.coords) == doctest::Approx(1.0).epsilon(1e-12));
  const FeatureLayout big{4, 3};
  std::vector<std::vector<double>> seen;
  for (int s = 0; s < 4; ++s)
    for (int t = 0; t < 4; ++t)
      for (std::size_t a = 0; a < 3; ++a) {
        const FeatureVector f = encode_features(s, t, a, big);
        CHECK(norm(f.coords) <= 1.0 + 1e-12);
        for (const auto& prev : seen) CHECK(prev != f.coords);
        seen.push_back(f.coords);
      }
  CHECK_THROWS_AS(encode_features(2, 0, 0, layout), Error);
  CHECK_THROWS_AS(encode_features(0, 0, 2, layout), Error);
}

TEST_CASE("init_params") {
  Rng a = make_stream({1});
  Rng b = make_stream({1});
  const DeepSetParams p = init_params(16, 5, 2.0, a);
  const DeepSetParams q = init_params(16, 5, 2.0, b);
  CHECK(p.alpha == q.alpha);
  CHECK(p.u == q.u);
  CHECK(p.alpha == p.alpha0);
  for (double u : p.u) CHECK(std::abs(u) == 1.0);

  const std::size_t m = 4096;
  const std::size_t d = 10;
  Rng r = make_stream({2});
  const DeepSetParams big = init_params(m, d, 1.0, r);
  const double mean_u = std::accumulate(big.u.begin(), big.u.end(), 0.0) / m;
  CHECK(std::abs(mean_u) <= 3.0 / std::sqrt(static_cast<double>(m)));
  double row_sq = 0.0;
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < d; ++k) row_sq += big.alpha0[k * m + j] * big.alpha0[k * m + j];
  CHECK(std::abs(row_sq / m - 1.0) <= 0.1);
}

TEST_CASE("forward closed-form examples") {
  const FeatureLayout layout{2, 2};
  const FeatureVector x = encode_features(0, 0, 0, layout);
  DeepSetParams w;
  w.m = 1;
  w.d = layout.dim();
  w.u = {1.0};
  w.alpha = x.coords;
  w.alpha0 = x.coords;
  const MfObservation single{0, JointConfig{{0}}};
  CHECK(forward(w, single, 0, layout) == doctest::Approx(1.0).epsilon(1e-14));

  for (double& v : w.alpha) v = -std::abs(v) - 0.1;
  CHECK(forward(w, single, 0, layout) == 0.0);
  CHECK(forward(w, MfObservation{1, JointConfig{{0, 1}}}, 1, layout) == 0.0);
}

TEST_CASE("forward matches the naive double sum and ignores population order") {
  Rng rng = make_stream({3});
  const FeatureLayout layout{4, 3};
  DeepSetParams w = init_params(32, layout.dim(), 1.0, rng);
  for (double& v : w.alpha) v += 0.3 * (uniform01(rng) - 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    const MfObservation obs = random_obs(5, 4, rng);
    const std::size_t a = uniform_index(rng, 3);
    const double f = forward(w, obs, a, layout);
    CHECK(f == doctest::Approx(naive_forward(w, obs, a, layout)).epsilon(1e-12));
    MfObservation perm = obs;
    perm.population = apply_permutation(obs.population, Permutation::random(5, rng));
    CHECK(std::abs(forward(w, perm, a, layout) - f) <= 1e-12);
  }
  const MfObservation swapped_a{0, JointConfig{{0, 1}}};
  const MfObservation swapped_b{0, JointConfig{{1, 0}}};
  CHECK(std::abs(forward(w, swapped_a, 2, layout) - forward(w, swapped_b, 2, layout)) <= 1e-12);
}

TEST_CASE("forward_all_actions agrees with forward") {
  Rng rng = make_stream({4});
  const FeatureLayout layout{3, 4};
  const DeepSetParams w = init_params(24, layout.dim(), 1.0, rng);
  const MfObservation obs = random_obs(4, 3, rng);
  std::vector<double> all(4);
  forward_all_actions(w, obs, layout, all);
  for (std::size_t a = 0; a < 4; ++a) CHECK(all[a] == doctest::Approx(forward(w, obs, a, layout)).epsilon(1e-13));
}

TEST_CASE("linearized network") {
  Rng rng = make_stream({5});
  const FeatureLayout layout{3, 2};
  DeepSetParams w = init_params(64, layout.dim(), 1.0, rng);
  const MfObservation obs = random_obs(3, 3, rng);
  CHECK(forward_linearized(w, obs, 1, layout) == forward(w, obs, 1, layout));
  // F0 is linear in alpha: F0(alpha0 + delta) = F(alpha0) + <grad F(alpha0), delta>.
  const Gradient g = grad_alpha(w, obs, 1, layout);
  std::vector<double> delta(w.alpha.size());
  for (double& v : delta) v = uniform01(rng) - 0.5;
  double lin = forward(w, obs, 1, layout);
  for (std::size_t i = 0; i < delta.size(); ++i) {
    w.alpha[i] += delta[i];
    lin += g.coords[i] * delta[i];
  }
  CHECK(forward_linearized(w, obs, 1, layout) == doctest::Approx(lin).epsilon(1e-12));
  CHECK(forward_linearized(w, obs, 1, layout) != doctest::Approx(forward(w, obs, 1, layout)));
}

TEST_CASE("gradient matches central differences away from kinks") {
  Rng rng = make_stream({6});
  const FeatureLayout layout{3, 3};
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    DeepSetParams w = init_params(8, layout.dim(), 1.0, rng);
    const MfObservation obs = random_obs(3, 3, rng);
    const std::size_t a = uniform_index(rng, 3);
    bool kink = false;
    for (StateId peer : obs.population.states) {
      const FeatureVector x = encode_features(obs.self_state, peer, a, layout);
      for (std::size_t j = 0; j < w.m; ++j) {
        double pre = 0.0;
        for (std::size_t k = 0; k < w.d; ++k) pre += w.alpha[k * w.m + j] * x.coords[k];
        kink = kink || std::abs(pre) <= 1e-3;
      }
    }
    if (kink) continue;
    ++checked;
    const Gradient g = grad_alpha(w, obs, a, layout);
    CHECK(norm(g.coords) <= 1.0 + 1e-12);
    const double h = 1e-6;
    for (std::size_t i = 0; i < w.alpha.size(); ++i) {
      const double keep = w.alpha[i];
      w.alpha[i] = keep + h;
      const double up = forward(w, obs, a, layout);
      w.alpha[i] = keep - h;
      const double down = forward(w, obs, a, layout);
      w.alpha[i] = keep;
      const double fd = (up - down) / (2 * h);
      CHECK(std::abs(fd - g.coords[i]) <= 1e-4 * std::max(1e-3, std::abs(g.coords[i])));
    }
  }
  CHECK(checked > 5);
}

TEST_CASE("dead units have zero gradient") {
  const FeatureLayout layout{2, 2};
  DeepSetParams w;
  w.m = 3;
  w.d = layout.dim();
  w.u = {1, -1, 1};
  w.alpha.assign(w.m * w.d, -1.0);
  w.alpha0 = w.alpha;
  const Gradient g = grad_alpha(w, MfObservation{0, JointConfig{{0, 1}}}, 0, layout);
  for (double v : g.coords) CHECK(v == 0.0);
}

TEST_CASE("ball projection") {
  TwoLayerWeights w;
  w.m = 1;
  w.d = 2;
  w.u = {1};
  w.alpha0 = {0.0, 0.0};
  w.alpha = {2.0 * std::cos(0.3), 2.0 * std::sin(0.3)};
  w.radius = 1.0;
  const TwoLayerWeights p = project_ball(w);
  CHECK(p.distance_from_init() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p.alpha[0] == doctest::Approx(std::cos(0.3)));
  const TwoLayerWeights pp = project_ball(p);
  CHECK(pp.alpha == p.alpha);
  w.alpha = {0.3, -0.2};
  CHECK(project_ball(w).alpha == w.alpha);
}

TEST_CASE("MLP baseline") {
  const FeatureLayout layout{9, 6};
  const MlpLayout mlp{9, 6, 4};
  const std::size_t m = matched_mlp_width(256, layout, mlp);
  const double ds = 256.0 * layout.dim();
  const double ml = static_cast<double>(m * mlp.dim());
  CHECK(std::abs(ml - ds) / ds <= 0.05);

  Rng rng = make_stream({7});
  const MlpParams w = init_mlp_params(m, mlp.dim(), 1.0, rng);
  Rng rng2 = make_stream({7});
  CHECK(init_mlp_params(m, mlp.dim(), 1.0, rng2).alpha == w.alpha);
  const MfObservation a{0, JointConfig{{0, 3, 5, 8}}};
  const MfObservation b{0, JointConfig{{8, 5, 3, 0}}};
  CHECK(mlp_forward(w, a, 2, mlp) != doctest::Approx(mlp_forward(w, b, 2, mlp)).epsilon(1e-9));

  MlpParams v = w;
  const Gradient g = mlp_grad(v, a, 2, mlp);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < v.alpha.size(); i += 7) {
    const double keep = v.alpha[i];
    v.alpha[i] = keep + h;
    const double up = mlp_forward(v, a, 2, mlp);
    v.alpha[i] = keep - h;
    const double down = mlp_forward(v, a, 2, mlp);
    v.alpha[i] = keep;
    worst = std::max(worst, std::abs((up - down) / (2 * h) - g.coords[i]));
  }
  CHECK(worst <= 1e-6);
  CHECK_THROWS_AS(mlp_forward(w, MfObservation{0, JointConfig{{0, 1}}}, 0, mlp), Error);
}

TEST_CASE("checkpoint round trip") {
  Rng rng = make_stream({8});
  DeepSetParams w = init_params(12, 7, 3.5, rng);
  w.alpha[5] += 0.25;
  const auto path = (std::filesystem::temp_directory_path() / "mfppo_ckpt_test.bin").string();
  save_checkpoint(path, w, NetKind::kMlp);
  NetKind kind = NetKind::kDeepSet;
  const TwoLayerWeights back = load_checkpoint(path, &kind);
  CHECK(kind == NetKind::kMlp);
  CHECK(back.m == w.m);
  CHECK(back.d == w.d);
  CHECK(back.radius == w.radius);
  CHECK(back.u == w.u);
  CHECK(back.alpha == w.alpha);
  CHECK(back.alpha0 == w.alpha0);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), Error);
}
