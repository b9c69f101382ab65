#include "mfppo/deepset_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "mfppo/error.hpp"

namespace mfppo {

double FeatureLayout::scale() { return 1.0 / std::sqrt(3.0); }

double MlpLayout::scale() const { return 1.0 / std::sqrt(static_cast<double>(num_agents + 2)); }

FeatureVector encode_features(StateId s, StateId s_prime, std::size_t abar_id,
                              const FeatureLayout& layout) {
  require(s >= 0 && s < layout.num_states && s_prime >= 0 && s_prime < layout.num_states,
          ErrorCode::kOutOfRange, "state id out of range for feature layout");
  require(abar_id < static_cast<std::size_t>(layout.num_actions), ErrorCode::kOutOfRange,
          "action id out of range for feature layout");
  FeatureVector x;
  x.coords.assign(layout.dim(), 0.0);
  const double c = FeatureLayout::scale();
  x.coords[layout.self_offset() + static_cast<std::size_t>(s)] = c;
  x.coords[layout.peer_offset() + static_cast<std::size_t>(s_prime)] = c;
  x.coords[layout.action_offset() + abar_id] = c;
  return x;
}

double TwoLayerWeights::distance_from_init() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double diff = alpha[i] - alpha0[i];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

namespace {

void init_weights(TwoLayerWeights& w, std::size_t m, std::size_t d, double radius, Rng& rng) {
  require(m >= 1 && d >= 1, ErrorCode::kInvalidArgument, "width and dimension must be >= 1");
  require(radius > 0.0, ErrorCode::kInvalidArgument, "radius must be positive");
  w.m = m;
  w.d = d;
  w.radius = radius;
  w.u.resize(m);
  w.alpha0.assign(m * d, 0.0);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  for (std::size_t j = 0; j < m; ++j) {
    w.u[j] = uniform01(rng) < 0.5 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < d; ++k) w.alpha0[k * m + j] = normal(rng);
  }
  w.alpha = w.alpha0;
}

void check_input(const TwoLayerWeights& w, const SparseInput& x) {
  for (const auto& g : x.groups)
    for (std::uint32_t k : g.indices)
      require(k < w.d, ErrorCode::kInvalidArgument, "feature dimension mismatch");
}

// pre[j] = value * sum_{k in indices} a[k * m + j]
void preactivations(std::span<const double> a, std::size_t m, const SparseInput::Group& g,
                    double value, std::vector<double>& pre) {
  pre.assign(m, 0.0);
  double* p = pre.data();
  for (std::uint32_t k : g.indices) {
    const double* row = a.data() + static_cast<std::size_t>(k) * m;
    for (std::size_t j = 0; j < m; ++j) p[j] += row[j];
  }
  for (std::size_t j = 0; j < m; ++j) p[j] *= value;
}

thread_local std::vector<double> tl_pre;
thread_local std::vector<double> tl_pre0;

}  // namespace

DeepSetParams init_params(std::size_t m, std::size_t d, double radius, Rng& rng) {
  DeepSetParams p;
  init_weights(p, m, d, radius, rng);
  return p;
}

MlpParams init_mlp_params(std::size_t m, std::size_t d, double radius, Rng& rng) {
  MlpParams p;
  init_weights(p, m, d, radius, rng);
  return p;
}

std::size_t matched_mlp_width(std::size_t deepset_width, const FeatureLayout& layout,
                              const MlpLayout& mlp_layout) {
  const double target = static_cast<double>(deepset_width * layout.dim());
  const auto width = static_cast<std::size_t>(
      std::llround(target / static_cast<double>(mlp_layout.dim())));
  return std::max<std::size_t>(1, width);
}

SparseInput deepset_input(const MfObservation& obs, std::size_t abar_id, const FeatureLayout& layout) {
  require(obs.self_state >= 0 && obs.self_state < layout.num_states, ErrorCode::kOutOfRange,
          "self state out of range for feature layout");
  require(abar_id < static_cast<std::size_t>(layout.num_actions), ErrorCode::kOutOfRange,
          "action id out of range for feature layout");
  const StateHistogram h = empirical_distribution(obs.population, layout.num_states);
  SparseInput x;
  x.value = FeatureLayout::scale();
  for (int s = 0; s < layout.num_states; ++s) {
    if (h.count(s) == 0) continue;
    SparseInput::Group g;
    g.indices = {static_cast<std::uint32_t>(layout.self_offset() + static_cast<std::size_t>(obs.self_state)),
                 static_cast<std::uint32_t>(layout.peer_offset() + static_cast<std::size_t>(s)),
                 static_cast<std::uint32_t>(layout.action_offset() + abar_id)};
    g.weight = h.mass(s);
    x.groups.push_back(std::move(g));
  }
  return x;
}

SparseInput mlp_input(const MfObservation& obs, std::size_t abar_id, const MlpLayout& layout) {
  require(obs.population.size() == static_cast<std::size_t>(layout.num_agents),
          ErrorCode::kInvalidArgument, "population size does not match MLP layout");
  require(abar_id < static_cast<std::size_t>(layout.num_actions), ErrorCode::kOutOfRange,
          "action id out of range for MLP layout");
  require(obs.self_state >= 0 && obs.self_state < layout.num_states, ErrorCode::kOutOfRange,
          "self state out of range for MLP layout");
  const auto S = static_cast<std::size_t>(layout.num_states);
  SparseInput::Group g;
  g.weight = 1.0;
  g.indices.push_back(static_cast<std::uint32_t>(obs.self_state));
  for (std::size_t i = 0; i < obs.population.size(); ++i) {
    const StateId s = obs.population[i];
    require(s >= 0 && s < layout.num_states, ErrorCode::kOutOfRange, "state id out of range");
    g.indices.push_back(static_cast<std::uint32_t>((i + 1) * S + static_cast<std::size_t>(s)));
  }
  g.indices.push_back(
      static_cast<std::uint32_t>((static_cast<std::size_t>(layout.num_agents) + 1) * S + abar_id));
  SparseInput x;
  x.value = layout.scale();
  x.groups.push_back(std::move(g));
  return x;
}

double forward(const TwoLayerWeights& w, const SparseInput& x) {
  check_input(w, x);
  double total = 0.0;
  for (const auto& g : x.groups) {
    preactivations(w.alpha, w.m, g, x.value, tl_pre);
    double acc = 0.0;
    for (std::size_t j = 0; j < w.m; ++j) acc += w.u[j] * std::max(tl_pre[j], 0.0);
    total += g.weight * acc;
  }
  return total / std::sqrt(static_cast<double>(w.m));
}

double forward_linearized(const TwoLayerWeights& w, const SparseInput& x) {
  check_input(w, x);
  double total = 0.0;
  for (const auto& g : x.groups) {
    preactivations(w.alpha, w.m, g, x.value, tl_pre);
    preactivations(w.alpha0, w.m, g, x.value, tl_pre0);
    double acc = 0.0;
    for (std::size_t j = 0; j < w.m; ++j)
      if (tl_pre0[j] > 0.0) acc += w.u[j] * tl_pre[j];
    total += g.weight * acc;
  }
  return total / std::sqrt(static_cast<double>(w.m));
}

void add_scaled_gradient(const TwoLayerWeights& w, const SparseInput& x, double scale,
                         std::span<double> target) {
  check_input(w, x);
  require(target.size() == w.alpha.size(), ErrorCode::kInvalidArgument,
          "gradient target has wrong length");
  const double base = scale * x.value / std::sqrt(static_cast<double>(w.m));
  // Gates are computed for every group before touching target, which may
  // alias alpha.
  std::vector<std::vector<double>> coefs(x.groups.size());
  for (std::size_t gi = 0; gi < x.groups.size(); ++gi) {
    const auto& g = x.groups[gi];
    preactivations(w.alpha, w.m, g, x.value, tl_pre);
    auto& c = coefs[gi];
    c.resize(w.m);
    for (std::size_t j = 0; j < w.m; ++j) c[j] = tl_pre[j] > 0.0 ? base * g.weight * w.u[j] : 0.0;
  }
  for (std::size_t gi = 0; gi < x.groups.size(); ++gi) {
    const auto& c = coefs[gi];
    for (std::uint32_t k : x.groups[gi].indices) {
      double* row = target.data() + static_cast<std::size_t>(k) * w.m;
      for (std::size_t j = 0; j < w.m; ++j) row[j] += c[j];
    }
  }
}

double forward(const DeepSetParams& params, const MfObservation& obs, std::size_t abar_id,
               const FeatureLayout& layout) {
  require(params.d == layout.dim(), ErrorCode::kInvalidArgument, "feature dimension mismatch");
  return forward(static_cast<const TwoLayerWeights&>(params), deepset_input(obs, abar_id, layout));
}

double forward_linearized(const DeepSetParams& params, const MfObservation& obs,
                          std::size_t abar_id, const FeatureLayout& layout) {
  require(params.d == layout.dim(), ErrorCode::kInvalidArgument, "feature dimension mismatch");
  return forward_linearized(static_cast<const TwoLayerWeights&>(params),
                            deepset_input(obs, abar_id, layout));
}

Gradient grad_alpha(const DeepSetParams& params, const MfObservation& obs, std::size_t abar_id,
                    const FeatureLayout& layout) {
  require(params.d == layout.dim(), ErrorCode::kInvalidArgument, "feature dimension mismatch");
  Gradient g;
  g.coords.assign(params.alpha.size(), 0.0);
  add_scaled_gradient(params, deepset_input(obs, abar_id, layout), 1.0, g.coords);
  return g;
}

void forward_all_actions(const DeepSetParams& params, const MfObservation& obs,
                         const FeatureLayout& layout, std::span<double> out) {
  require(params.d == layout.dim(), ErrorCode::kInvalidArgument, "feature dimension mismatch");
  require(out.size() == static_cast<std::size_t>(layout.num_actions), ErrorCode::kInvalidArgument,
          "output span must hold one value per action");
  require(obs.self_state >= 0 && obs.self_state < layout.num_states, ErrorCode::kOutOfRange,
          "self state out of range for feature layout");
  const StateHistogram h = empirical_distribution(obs.population, layout.num_states);
  const std::size_t m = params.m;
  const double c = FeatureLayout::scale();
  const double* a = params.alpha.data();
  const double* self_row = a + (layout.self_offset() + static_cast<std::size_t>(obs.self_state)) * m;
  std::fill(out.begin(), out.end(), 0.0);
  tl_pre.resize(m);
  for (int s = 0; s < layout.num_states; ++s) {
    if (h.count(s) == 0) continue;
    const double* peer_row = a + (layout.peer_offset() + static_cast<std::size_t>(s)) * m;
    double* base = tl_pre.data();
    for (std::size_t j = 0; j < m; ++j) base[j] = self_row[j] + peer_row[j];
    const double weight = h.mass(s);
    for (std::size_t ab = 0; ab < out.size(); ++ab) {
      const double* act_row = a + (layout.action_offset() + ab) * m;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        acc += params.u[j] * std::max(c * (base[j] + act_row[j]), 0.0);
      out[ab] += weight * acc;
    }
  }
  const double norm = std::sqrt(static_cast<double>(m));
  for (double& v : out) v /= norm;
}

double mlp_forward(const MlpParams& params, const MfObservation& obs, std::size_t abar_id,
                   const MlpLayout& layout) {
  require(params.d == layout.dim(), ErrorCode::kInvalidArgument, "feature dimension mismatch");
  return forward(static_cast<const TwoLayerWeights&>(params), mlp_input(obs, abar_id, layout));
}

Gradient mlp_grad(const MlpParams& params, const MfObservation& obs, std::size_t abar_id,
                  const MlpLayout& layout) {
  require(params.d == layout.dim(), ErrorCode::kInvalidArgument, "feature dimension mismatch");
  Gradient g;
  g.coords.assign(params.alpha.size(), 0.0);
  add_scaled_gradient(params, mlp_input(obs, abar_id, layout), 1.0, g.coords);
  return g;
}

bool project_ball_inplace(TwoLayerWeights& w) {
  const double dist = w.distance_from_init();
  if (dist <= w.radius) return false;
  const double shrink = w.radius / dist;
  for (std::size_t i = 0; i < w.alpha.size(); ++i)
    w.alpha[i] = w.alpha0[i] + shrink * (w.alpha[i] - w.alpha0[i]);
  return true;
}

namespace {

constexpr char kMagicDeepSet[8] = {'M', 'F', 'P', 'P', 'O', 'D', 'S', '1'};
constexpr char kMagicMlp[8] = {'M', 'F', 'P', 'P', 'O', 'M', 'L', '1'};

template <class T>
void write_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  require(static_cast<bool>(is), ErrorCode::kIo, "truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const std::string& path, const TwoLayerWeights& w, NetKind kind) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot open checkpoint for writing: " + path);
  os.write(kind == NetKind::kDeepSet ? kMagicDeepSet : kMagicMlp, 8);
  write_le<std::uint64_t>(os, w.m);
  write_le<std::uint64_t>(os, w.d);
  write_le<double>(os, w.radius);
  for (double v : w.u) write_le<std::int8_t>(os, v < 0.0 ? std::int8_t{-1} : std::int8_t{1});
  for (double v : w.alpha0) write_le<double>(os, v);
  for (double v : w.alpha) write_le<double>(os, v);
  require(static_cast<bool>(os), ErrorCode::kIo, "failed writing checkpoint: " + path);
}

TwoLayerWeights load_checkpoint(const std::string& path, NetKind* kind) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  require(static_cast<bool>(is), ErrorCode::kIo, "truncated checkpoint");
  NetKind k;
  if (std::memcmp(magic, kMagicDeepSet, 8) == 0) {
    k = NetKind::kDeepSet;
  } else if (std::memcmp(magic, kMagicMlp, 8) == 0) {
    k = NetKind::kMlp;
  } else {
    fail(ErrorCode::kIo, "not a checkpoint file: " + path);
  }
  if (kind != nullptr) *kind = k;
  TwoLayerWeights w;
  w.m = read_le<std::uint64_t>(is);
  w.d = read_le<std::uint64_t>(is);
  w.radius = read_le<double>(is);
  require(w.m >= 1 && w.d >= 1 && w.m * w.d <= (std::size_t{1} << 30), ErrorCode::kIo,
          "implausible checkpoint dimensions");
  w.u.resize(w.m);
  for (auto& v : w.u) {
    const auto sign = read_le<std::int8_t>(is);
    require(sign == 1 || sign == -1, ErrorCode::kIo, "corrupt output sign in checkpoint");
    v = sign;
  }
  w.alpha0.resize(w.m * w.d);
  for (auto& v : w.alpha0) v = read_le<double>(is);
  w.alpha.resize(w.m * w.d);
  for (auto& v : w.alpha) v = read_le<double>(is);
  return w;
}

}  // namespace mfppo
