#include "mfppo/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <mutex>
#include <thread>

#include "mfppo/error.hpp"

namespace mfppo {

void TrainSchedule::validate() const {
  require(K >= 1, ErrorCode::kInvalidArgument, "K must be >= 1");
  require(T >= 1, ErrorCode::kInvalidArgument, "T must be >= 1");
  require(upsilon > 0.0, ErrorCode::kInvalidArgument, "upsilon must be positive");
  require(radius_actor > 0.0 && radius_critic > 0.0, ErrorCode::kInvalidArgument,
          "radii must be positive");
  require(m_actor >= 1 && m_critic >= 1, ErrorCode::kInvalidArgument, "widths must be >= 1");
  require(burn_in >= 0, ErrorCode::kInvalidArgument, "burn_in must be >= 0");
  require(eval_episodes >= 1, ErrorCode::kInvalidArgument, "eval_episodes must be >= 1");
}

double TrainSchedule::tau(int k) const {
  if (k == 0) return 1.0;
  return upsilon * std::sqrt(static_cast<double>(K)) / k;
}

double TrainSchedule::upsilon_k() const { return upsilon * std::sqrt(static_cast<double>(K)); }

double TrainSchedule::eta() const { return 1.0 / std::sqrt(static_cast<double>(T)); }

int TrainSchedule::effective_burn_in(double gamma) const {
  if (burn_in > 0) return burn_in;
  return static_cast<int>(std::ceil(5.0 / (1.0 - gamma) - 1e-9));
}

SparseInput Critic::input(const MfObservation& obs, std::size_t abar_id) const {
  return kind == NetKind::kDeepSet ? deepset_input(obs, abar_id, layout)
                                   : mlp_input(obs, abar_id, mlp_layout);
}

double Critic::operator()(const MfObservation& obs, std::size_t abar_id) const {
  return forward(weights, input(obs, abar_id));
}

Critic make_critic(const MeanFieldEnv& env, NetKind kind, std::size_t m, double radius, Rng& rng) {
  Critic c;
  c.kind = kind;
  c.layout = FeatureLayout{env.num_states(), static_cast<int>(env.num_actions())};
  c.mlp_layout = MlpLayout{env.num_states(), static_cast<int>(env.num_actions()), env.num_agents()};
  if (kind == NetKind::kDeepSet)
    c.weights = init_params(m, c.layout.dim(), radius, rng);
  else
    c.weights = init_mlp_params(m, c.mlp_layout.dim(), radius, rng);
  return c;
}

namespace {

Transition sample_transition(const MeanFieldEnv& env, const EnergyPolicy& policy,
                             const FeatureLayout& layout, int burn_in, bool uniform_action,
                             Rng& rng) {
  require(burn_in >= 1, ErrorCode::kInvalidArgument, "burn_in must be >= 1");
  JointConfig config = env.reset(rng);
  const std::size_t who = uniform_index(rng, config.size());
  MfObservation obs{config[who], std::move(config)};
  for (int t = 0; t < burn_in; ++t) {
    const std::size_t a = sample_action(policy, obs, layout, rng);
    auto next = env_step(env, obs.population, a, rng);
    obs.population = std::move(next.first);
    obs.self_state = obs.population[who];
  }
  Transition tr;
  tr.action_id = uniform_action ? uniform_index(rng, env.num_actions())
                                : sample_action(policy, obs, layout, rng);
  auto [next, r] = env_step(env, obs.population, tr.action_id, rng);
  tr.reward = r;
  tr.next_obs = MfObservation{next[who], std::move(next)};
  tr.obs = std::move(obs);
  tr.next_action_id = sample_action(policy, tr.next_obs, layout, rng);
  return tr;
}

}  // namespace

Transition sample_stationary(const MeanFieldEnv& env, const EnergyPolicy& policy,
                             const FeatureLayout& layout, int burn_in, Rng& rng) {
  return sample_transition(env, policy, layout, burn_in, false, rng);
}

Transition sample_improvement_dist(const MeanFieldEnv& env, const EnergyPolicy& policy_k,
                                   const FeatureLayout& layout, int burn_in, Rng& rng) {
  return sample_transition(env, policy_k, layout, burn_in, true, rng);
}

int worker_count() {
  if (const char* v = std::getenv("MFPPO_THREADS")) {
    const int n = std::atoi(v);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Transition> generate_samples(const MeanFieldEnv& env, const EnergyPolicy& policy,
                                         const FeatureLayout& layout, int burn_in, int count,
                                         bool uniform_actions, std::uint64_t seed, int k,
                                         int phase) {
  std::vector<Transition> out(static_cast<std::size_t>(count));
  auto work = [&](int t) {
    Rng rng = make_stream({seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(phase),
                           static_cast<std::uint64_t>(t)});
    out[static_cast<std::size_t>(t)] =
        sample_transition(env, policy, layout, burn_in, uniform_actions, rng);
  };
  const int workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (int t = 0; t < count; ++t) work(t);
    return out;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int t = w; t < count; t += workers) work(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

namespace {

// alpha <- alpha - eta * delta * grad F(x), projection, ergodic accumulation.
struct InnerLoop {
  TwoLayerWeights& w;
  std::vector<double> sum;
  double loss = 0.0;
  double max_distance = 0.0;
  int steps = 0;

  explicit InnerLoop(TwoLayerWeights& weights) : w(weights), sum(weights.alpha.size(), 0.0) {}

  void step(const SparseInput& x, double delta, double eta) {
    require(std::isfinite(delta), ErrorCode::kNumeric, "non-finite inner-loop loss");
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += w.alpha[i];
    add_scaled_gradient(w, x, -eta * delta, w.alpha);
    project_ball_inplace(w);
    max_distance = std::max(max_distance, w.distance_from_init());
    loss += delta * delta;
    ++steps;
  }

  InnerResult finish() {
    const double inv = 1.0 / steps;
    for (std::size_t i = 0; i < sum.size(); ++i) w.alpha[i] = sum[i] * inv;
    return InnerResult{loss * inv, max_distance};
  }
};

}  // namespace

InnerResult td_policy_evaluation(const MeanFieldEnv& env, std::span<const Transition> samples,
                                 Critic& critic) {
  require(!samples.empty(), ErrorCode::kInvalidArgument, "no samples");
  const double gamma = env.gamma();
  const double eta = 1.0 / std::sqrt(static_cast<double>(samples.size()));
  InnerLoop loop(critic.weights);
  for (const Transition& tr : samples) {
    const SparseInput x = critic.input(tr.obs, tr.action_id);
    const SparseInput xn = critic.input(tr.next_obs, tr.next_action_id);
    const double delta =
        forward(critic.weights, x) - (1.0 - gamma) * tr.reward - gamma * forward(critic.weights, xn);
    loop.step(x, delta, eta);
  }
  return loop.finish();
}

InnerResult sgd_policy_improvement(std::span<const Transition> samples, const Critic& critic,
                                   const EnergyPolicy& policy_k, DeepSetParams& actor,
                                   const FeatureLayout& layout, const TrainSchedule& schedule,
                                   int k) {
  require(k >= 0 && k < schedule.K, ErrorCode::kInvalidArgument, "iteration out of range");
  require(!samples.empty(), ErrorCode::kInvalidArgument, "no samples");
  const double eta = 1.0 / std::sqrt(static_cast<double>(samples.size()));
  const double tau_k = schedule.tau(k);
  const double tau_next = schedule.tau(k + 1);
  const double ups = schedule.upsilon_k();
  InnerLoop loop(actor);
  for (const Transition& tr : samples) {
    const double fq = critic(tr.obs, tr.action_id);
    const double fa_prev =
        policy_k.actor ? forward(*policy_k.actor, tr.obs, tr.action_id, layout) : 0.0;
    const SparseInput x = deepset_input(tr.obs, tr.action_id, layout);
    const double delta =
        forward(actor, x) - improvement_target(fq, fa_prev, ups, tau_k, tau_next);
    loop.step(x, delta, eta);
  }
  return loop.finish();
}

MonteCarloEstimate estimate_value(const MeanFieldEnv& env, const EnergyPolicy& policy,
                                  int episodes, bool greedy, std::uint64_t seed,
                                  std::uint64_t tag) {
  require(episodes >= 1, ErrorCode::kInvalidArgument, "episodes must be >= 1");
  const FeatureLayout layout{env.num_states(), static_cast<int>(env.num_actions())};
  const double gamma = env.gamma();
  const int horizon = horizon_for(gamma);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng = make_stream({seed, tag, 0x65u, static_cast<std::uint64_t>(e)});
    JointConfig config = env.reset(rng);
    const std::size_t who = uniform_index(rng, config.size());
    MfObservation obs{config[who], std::move(config)};
    double ret = 0.0;
    double discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const std::size_t a = greedy ? greedy_action(policy, obs, layout)
                                   : sample_action(policy, obs, layout, rng);
      auto [next, r] = env_step(env, obs.population, a, rng);
      ret += discount * r;
      discount *= gamma;
      obs.population = std::move(next);
      obs.self_state = obs.population[who];
    }
    ret *= 1.0 - gamma;
    sum += ret;
    sum_sq += ret * ret;
  }
  const double n = episodes;
  MonteCarloEstimate est;
  est.mean = sum / n;
  const double var = episodes > 1 ? std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1.0)) : 0.0;
  est.std_error = std::sqrt(var / n);
  return est;
}

TrainingResult mf_ppo(const MeanFieldEnv& env, const TrainSchedule& schedule,
                      const IterationObserver& observer) {
  schedule.validate();
  const FeatureLayout layout{env.num_states(), static_cast<int>(env.num_actions())};
  const int burn_in = schedule.effective_burn_in(env.gamma());

  Rng init_rng = make_stream({schedule.seed, 0x696e6974u});
  const DeepSetParams actor_init = init_params(schedule.m_actor, layout.dim(), schedule.radius_actor, init_rng);
  Critic critic;
  if (schedule.critic_kind == NetKind::kDeepSet && schedule.m_critic == schedule.m_actor) {
    critic.kind = NetKind::kDeepSet;
    critic.layout = layout;
    critic.mlp_layout = MlpLayout{env.num_states(), layout.num_actions, env.num_agents()};
    critic.weights = actor_init;
    critic.weights.radius = schedule.radius_critic;
  } else {
    Rng critic_rng = make_stream({schedule.seed, 0x63726974u});
    critic = make_critic(env, schedule.critic_kind, schedule.m_critic, schedule.radius_critic, critic_rng);
  }
  const TwoLayerWeights critic_init = critic.weights;

  TrainingResult result;
  result.policy = EnergyPolicy::uniform(env.num_actions());
  DeepSetParams actor = actor_init;
  const auto start = std::chrono::steady_clock::now();

  for (int k = 0; k < schedule.K; ++k) {
    if (schedule.reinit_per_call) {
      critic.weights.alpha = critic_init.alpha0;
      actor.alpha = actor_init.alpha0;
    }
    const EnergyPolicy& policy_k = result.policy;

    const auto td_samples = generate_samples(env, policy_k, layout, burn_in, schedule.T, false,
                                             schedule.seed, k, 0);
    const InnerResult td = td_policy_evaluation(env, td_samples, critic);
    require(std::isfinite(td.mean_loss), ErrorCode::kNumeric,
            "non-finite TD loss at iteration " + std::to_string(k));

    const auto sgd_samples = generate_samples(env, policy_k, layout, burn_in, schedule.T, true,
                                              schedule.seed, k, 1);
    const InnerResult sgd =
        sgd_policy_improvement(sgd_samples, critic, policy_k, actor, layout, schedule, k);
    require(std::isfinite(sgd.mean_loss), ErrorCode::kNumeric,
            "non-finite improvement loss at iteration " + std::to_string(k));

    EnergyPolicy next;
    next.actor = actor;
    next.temperature = schedule.tau(k + 1);
    next.action_set_size = env.num_actions();

    IterationRecord rec;
    rec.k = k;
    rec.td_loss = td.mean_loss;
    rec.improvement_loss = sgd.mean_loss;
    rec.tau_k = next.temperature;
    rec.upsilon_k = schedule.upsilon_k();
    const std::size_t kl_n = std::min<std::size_t>(256, sgd_samples.size());
    double kl = 0.0;
    for (std::size_t i = 0; i < kl_n; ++i) {
      const auto p = action_distribution(next, sgd_samples[i].obs, layout);
      const auto q = action_distribution(policy_k, sgd_samples[i].obs, layout);
      kl += kl_divergence(p, q);
    }
    rec.kl_to_prev = kl / static_cast<double>(kl_n);
    rec.est_value = estimate_value(env, next, schedule.eval_episodes, false, schedule.seed,
                                   static_cast<std::uint64_t>(k)).mean;
    require(std::isfinite(rec.est_value), ErrorCode::kNumeric, "non-finite value estimate");
    rec.wallclock_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start).count();

    result.policy = std::move(next);
    result.records.push_back(rec);
    if (observer) observer(rec, result.policy, critic);
  }
  result.critic = std::move(critic);
  return result;
}

void write_metrics_header(std::ostream& out) {
  out << "k,td_loss,improvement_loss,est_value,kl_to_prev,tau_k,upsilon_k,wallclock_ms\n";
}

void write_metrics_row(std::ostream& out, const IterationRecord& r) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17) << r.k << ',' << r.td_loss << ',' << r.improvement_loss << ','
      << r.est_value << ',' << r.kl_to_prev << ',' << r.tau_k << ',' << r.upsilon_k << ','
      << std::fixed << std::setprecision(3) << r.wallclock_ms << '\n';
  out.flags(flags);
  out.precision(prec);
}

ClassPolicy lift_policy(const EnergyPolicy& policy, const QuotientMDP& q,
                        const FeatureLayout& layout, bool greedy) {
  ClassPolicy out(q.num_classes() * q.num_actions, 0.0);
  for (std::size_t c = 0; c < q.num_classes(); ++c) {
    const MfObservation obs = q.representative(c);
    if (greedy) {
      out[c * q.num_actions + greedy_action(policy, obs, layout)] = 1.0;
    } else {
      const auto p = action_distribution(policy, obs, layout);
      std::copy(p.begin(), p.end(), out.begin() + static_cast<std::ptrdiff_t>(c * q.num_actions));
    }
  }
  return out;
}

QTable lift_critic(const Critic& critic, const QuotientMDP& q) {
  QTable t;
  t.num_actions = q.num_actions;
  t.values.resize(q.num_classes() * q.num_actions);
  for (std::size_t c = 0; c < q.num_classes(); ++c) {
    const MfObservation obs = q.representative(c);
    for (std::size_t a = 0; a < q.num_actions; ++a) t.values[c * q.num_actions + a] = critic(obs, a);
  }
  return t;
}

}  // namespace mfppo
