#ifndef MFPPO_DEEPSET_NET_HPP
#define MFPPO_DEEPSET_NET_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfppo/mf_core.hpp"
#include "mfppo/rng.hpp"

namespace mfppo {

// Input layout (s, s', abar): one-hot of s, one-hot of s', one-hot of the abar
// index, all scaled by 1/sqrt(3) so every encoded vector has unit norm.
struct FeatureLayout {
  int num_states = 0;
  int num_actions = 0;

  std::size_t dim() const { return static_cast<std::size_t>(2 * num_states + num_actions); }
  std::size_t self_offset() const { return 0; }
  std::size_t peer_offset() const { return static_cast<std::size_t>(num_states); }
  std::size_t action_offset() const { return static_cast<std::size_t>(2 * num_states); }
  static double scale();
};

// Layout of the order-sensitive MLP baseline: own state, then every agent's
// state in population order, then abar; N + 2 one-hot blocks scaled to unit norm.
struct MlpLayout {
  int num_states = 0;
  int num_actions = 0;
  int num_agents = 0;

  std::size_t dim() const {
    return static_cast<std::size_t>((num_agents + 1) * num_states + num_actions);
  }
  double scale() const;
};

struct FeatureVector {
  std::vector<double> coords;
};

FeatureVector encode_features(StateId s, StateId s_prime, std::size_t abar_id,
                              const FeatureLayout& layout);

// Two-layer ReLU weights shared by the DeepSet networks and the MLP baseline.
// The output signs u are frozen; alpha is trainable and stays inside the ball
// of the given radius around alpha0. Flat index of unit j, coordinate k is
// k * m + j.
struct TwoLayerWeights {
  std::size_t m = 0;
  std::size_t d = 0;
  std::vector<double> u;
  std::vector<double> alpha;
  std::vector<double> alpha0;
  double radius = 1.0;

  double distance_from_init() const;
};

struct DeepSetParams : TwoLayerWeights {};
struct MlpParams : TwoLayerWeights {};

struct Gradient {
  std::vector<double> coords;
};

// u_j ~ Unif{-1, +1}, alpha0_j ~ N(0, I_d / d); alpha starts at alpha0.
DeepSetParams init_params(std::size_t m, std::size_t d, double radius, Rng& rng);
MlpParams init_mlp_params(std::size_t m, std::size_t d, double radius, Rng& rng);

// MLP width whose trainable parameter count m * d_mlp is closest to m * d.
std::size_t matched_mlp_width(std::size_t deepset_width, const FeatureLayout& layout,
                              const MlpLayout& mlp_layout);

// A set-structured sparse input: each group is one encoded feature vector
// (a handful of one-hot coordinates sharing the value `value`) with an
// averaging weight. F = 1/sqrt(m) * sum_g weight_g * sum_j u_j relu(alpha_j . x_g).
struct SparseInput {
  struct Group {
    std::vector<std::uint32_t> indices;
    double weight = 0.0;
  };
  std::vector<Group> groups;
  double value = 0.0;
};

// Distinct population states with multiplicities; sum over s' in the
// population becomes sum over distinct states weighted by count / N, which
// is the same double sum evaluated in canonical order.
SparseInput deepset_input(const MfObservation& obs, std::size_t abar_id, const FeatureLayout& layout);
SparseInput mlp_input(const MfObservation& obs, std::size_t abar_id, const MlpLayout& layout);

double forward(const TwoLayerWeights& w, const SparseInput& x);
double forward_linearized(const TwoLayerWeights& w, const SparseInput& x);
// target += scale * grad_alpha F(x), gates evaluated at w.alpha (strict > 0).
// `target` may alias w.alpha.
void add_scaled_gradient(const TwoLayerWeights& w, const SparseInput& x, double scale,
                         std::span<double> target);

double forward(const DeepSetParams& params, const MfObservation& obs, std::size_t abar_id,
               const FeatureLayout& layout);
double forward_linearized(const DeepSetParams& params, const MfObservation& obs,
                          std::size_t abar_id, const FeatureLayout& layout);
Gradient grad_alpha(const DeepSetParams& params, const MfObservation& obs, std::size_t abar_id,
                    const FeatureLayout& layout);

// F(obs, abar) for every abar in the layout, sharing the (s, s') partial sums.
void forward_all_actions(const DeepSetParams& params, const MfObservation& obs,
                         const FeatureLayout& layout, std::span<double> out);

double mlp_forward(const MlpParams& params, const MfObservation& obs, std::size_t abar_id,
                   const MlpLayout& layout);
Gradient mlp_grad(const MlpParams& params, const MfObservation& obs, std::size_t abar_id,
                  const MlpLayout& layout);

// Radial projection onto the ball of radius w.radius around w.alpha0.
// Returns true if alpha moved.
bool project_ball_inplace(TwoLayerWeights& w);
template <class Params>
Params project_ball(Params params) {
  project_ball_inplace(params);
  return params;
}

enum class NetKind : std::uint8_t { kDeepSet, kMlp };

// Little-endian checkpoint: 8-byte magic, m and d as uint64, radius as f64,
// u as int8[m], then alpha0 and alpha as f64[m * d].
void save_checkpoint(const std::string& path, const TwoLayerWeights& w, NetKind kind);
TwoLayerWeights load_checkpoint(const std::string& path, NetKind* kind = nullptr);

}  // namespace mfppo

#endif  // MFPPO_DEEPSET_NET_HPP
