#include "mfppo/run.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <boost/uuid/detail/sha1.hpp>

#include "mfppo/checks.hpp"
#include "mfppo/config.hpp"
#include "mfppo/error.hpp"
#include "mfppo/oracle.hpp"
#include "mfppo/symmetry.hpp"

namespace mfppo {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write '" + path.string() + "'");
  return out;
}

std::string real_text(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  const ConfigFile file = ConfigFile::parse(text, origin);
  for (const auto& name : file.sections())
    require(name == "run" || name == "schedule" || name == "env", ErrorCode::kInvalidArgument,
            origin + ": unknown section [" + name + "]");
  RunConfig cfg;
  cfg.origin = origin;
  cfg.text = text;

  const ConfigSection run = file.section("run");
  cfg.env = run.str("env");
  require(!cfg.env.empty(), ErrorCode::kInvalidArgument, origin + ": [run] env is empty");
  cfg.schedule.seed = static_cast<std::uint64_t>(run.integer("seed", 0));
  cfg.out = run.str("out", "run");
  cfg.checkpoint_every = static_cast<int>(run.integer("checkpoint_every", 0));
  require(cfg.checkpoint_every >= 0, ErrorCode::kInvalidArgument,
          origin + ": checkpoint_every must be >= 0");
  const std::string critic = run.str("critic", "deepset");
  require(critic == "deepset" || critic == "mlp", ErrorCode::kInvalidArgument,
          origin + ": critic must be deepset or mlp");
  cfg.schedule.critic_kind = critic == "mlp" ? NetKind::kMlp : NetKind::kDeepSet;
  cfg.schedule.eval_episodes = static_cast<int>(run.integer("eval_episodes", 32));
  cfg.checks = words(run.str("checks", ""));
  for (const auto& c : cfg.checks) {
    const auto& names = check_suite_names();
    require(std::find(names.begin(), names.end(), c) != names.end(), ErrorCode::kInvalidArgument,
            origin + ": unknown check suite '" + c + "'");
  }
  run.finish();

  if (file.has_section("schedule")) {
    const ConfigSection s = file.section("schedule");
    TrainSchedule& t = cfg.schedule;
    t.K = static_cast<int>(s.integer("K", t.K));
    t.T = static_cast<int>(s.integer("T", t.T));
    t.upsilon = s.real("upsilon", t.upsilon);
    t.radius_actor = s.real("radius_actor", t.radius_actor);
    t.radius_critic = s.real("radius_critic", t.radius_critic);
    const auto m_actor = s.integer("m_actor", static_cast<std::int64_t>(t.m_actor));
    const auto m_critic = s.integer("m_critic", static_cast<std::int64_t>(t.m_critic));
    require(m_actor >= 1 && m_critic >= 1, ErrorCode::kInvalidArgument,
            origin + ": widths must be >= 1");
    t.m_actor = static_cast<std::size_t>(m_actor);
    t.m_critic = static_cast<std::size_t>(m_critic);
    t.burn_in = static_cast<int>(s.integer("burn_in", t.burn_in));
    const auto reinit = s.integer("reinit_per_call", 0);
    require(reinit == 0 || reinit == 1, ErrorCode::kInvalidArgument,
            origin + ": reinit_per_call must be 0 or 1");
    t.reinit_per_call = reinit == 1;
    s.finish();
  }
  cfg.schedule.validate();

  if (cfg.env == "inline") {
    require(file.has_section("env"), ErrorCode::kInvalidArgument,
            origin + ": env = inline needs an [env] section");
    // Validate eagerly so a bad spec fails before any work.
    env_from_section(file.section("env"));
  } else {
    require(!file.has_section("env"), ErrorCode::kInvalidArgument,
            origin + ": [env] section given but [run] env is not 'inline'");
    const auto names = builtin_env_names();
    require(std::find(names.begin(), names.end(), cfg.env) != names.end(),
            ErrorCode::kInvalidArgument, origin + ": unknown environment '" + cfg.env + "'");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path), path);
}

MeanFieldEnv resolve_env(const RunConfig& config) {
  if (config.env == "inline")
    return env_from_section(ConfigFile::parse(config.text, config.origin).section("env"));
  return builtin_env(config.env);
}

MeanFieldEnv resolve_env_spec(const std::string& spec) {
  if (fs::is_regular_file(spec)) return resolve_env(load_run_config(spec));
  return builtin_env(spec);
}

std::string content_hash(const std::string& data) {
  boost::uuids::detail::sha1 sha;
  const std::string header = "blob " + std::to_string(data.size()) + '\0';
  sha.process_bytes(header.data(), header.size());
  sha.process_bytes(data.data(), data.size());
  boost::uuids::detail::sha1::digest_type digest;
  sha.get_digest(digest);
  std::ostringstream out;
  for (unsigned int word : digest) out << std::hex << std::setw(8) << std::setfill('0') << word;
  return out.str();
}

namespace {

// A run config that reproduces the run on its own: every schedule field
// resolved and the environment spec inlined.
std::string manifest_text(const RunConfig& cfg, const std::string& input_hash) {
  const TrainSchedule& t = cfg.schedule;
  std::ostringstream m;
  m << "# input_hash = " << input_hash << "\n";
  m << "# source = " << cfg.origin << "\n\n";
  m << "[run]\n";
  m << "env = inline\n";
  m << "seed = " << t.seed << "\n";
  m << "out = " << cfg.out << "\n";
  m << "checkpoint_every = " << cfg.checkpoint_every << "\n";
  m << "critic = " << (t.critic_kind == NetKind::kMlp ? "mlp" : "deepset") << "\n";
  m << "eval_episodes = " << t.eval_episodes << "\n";
  if (!cfg.checks.empty()) {
    m << "checks =";
    for (const auto& c : cfg.checks) m << ' ' << c;
    m << "\n";
  }
  m << "\n[schedule]\n";
  m << "K = " << t.K << "\nT = " << t.T << "\nupsilon = " << real_text(t.upsilon) << "\n";
  m << "radius_actor = " << real_text(t.radius_actor) << "\n";
  m << "radius_critic = " << real_text(t.radius_critic) << "\n";
  m << "m_actor = " << t.m_actor << "\nm_critic = " << t.m_critic << "\n";
  m << "burn_in = " << t.burn_in << "\nreinit_per_call = " << (t.reinit_per_call ? 1 : 0) << "\n";
  m << "\n[env]\n";
  const auto items = cfg.env == "inline"
                         ? ConfigFile::parse(cfg.text, cfg.origin).items("env")
                         : ConfigFile::parse(scenario_library_text(), "scenarios.ini").items(cfg.env);
  for (const auto& [k, v] : items) m << k << " = " << v << "\n";
  return m.str();
}

}  // namespace

std::string run_training(const std::string& config_path, const TrainOverrides& overrides) {
  RunConfig cfg = load_run_config(config_path);
  if (overrides.seed) cfg.schedule.seed = *overrides.seed;
  if (overrides.out) cfg.out = *overrides.out;
  if (overrides.checkpoint_every) {
    require(*overrides.checkpoint_every >= 0, ErrorCode::kInvalidArgument,
            "checkpoint-every must be >= 0");
    cfg.checkpoint_every = *overrides.checkpoint_every;
  }
  const MeanFieldEnv env = resolve_env(cfg);
  TrainSchedule sched = cfg.schedule;
  if (sched.critic_kind == NetKind::kMlp) {
    const FeatureLayout layout{env.num_states(), static_cast<int>(env.num_actions())};
    const MlpLayout mlp{env.num_states(), layout.num_actions, env.num_agents()};
    sched.m_critic = matched_mlp_width(sched.m_critic, layout, mlp);
  }

  const fs::path out_dir(cfg.out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create '" + out_dir.string() + "'");

  const std::string input_hash = content_hash(cfg.text + '\0' + scenario_library_text() + '\0' +
                                              std::to_string(cfg.schedule.seed));
  {
    std::ofstream manifest = open_out(out_dir / "manifest.ini");
    manifest << manifest_text(cfg, input_hash);
  }

  std::ofstream metrics = open_out(out_dir / "metrics.csv");
  write_metrics_header(metrics);
  const int every = cfg.checkpoint_every;
  const TrainingResult result =
      mf_ppo(env, sched, [&](const IterationRecord& rec, const EnergyPolicy& policy, const Critic& critic) {
        write_metrics_row(metrics, rec);
        metrics.flush();
        if (every > 0 && (rec.k + 1) % every == 0) {
          std::ostringstream tag;
          tag << std::setw(4) << std::setfill('0') << rec.k;
          save_checkpoint((out_dir / ("actor_k" + tag.str() + ".bin")).string(), *policy.actor,
                          NetKind::kDeepSet);
          save_checkpoint((out_dir / ("critic_k" + tag.str() + ".bin")).string(), critic.weights,
                          critic.kind);
        }
      });
  save_checkpoint((out_dir / "actor.bin").string(), *result.policy.actor, NetKind::kDeepSet);
  save_checkpoint((out_dir / "critic.bin").string(), result.critic.weights, result.critic.kind);

  std::ostringstream summary;
  summary << "trained " << env.name() << " for K=" << sched.K << " (T=" << sched.T
          << "), final est_value " << result.records.back().est_value << "; wrote "
          << (out_dir / "metrics.csv").string() << "\n";
  for (const auto& suite : cfg.checks) {
    bool pass = false;
    summary << run_checks(suite, cfg.schedule.seed, cfg.out, &pass);
  }
  return summary.str();
}

EvalReport run_eval(const std::string& checkpoint, const std::string& env_spec, int episodes,
                    std::uint64_t seed) {
  require(episodes >= 1, ErrorCode::kInvalidArgument, "episodes must be >= 1");
  const MeanFieldEnv env = resolve_env_spec(env_spec);
  NetKind kind;
  TwoLayerWeights w = load_checkpoint(checkpoint, &kind);
  require(kind == NetKind::kDeepSet, ErrorCode::kInvalidArgument,
          "checkpoint is not a DeepSet actor");
  const FeatureLayout layout{env.num_states(), static_cast<int>(env.num_actions())};
  require(w.d == layout.dim(), ErrorCode::kInvalidArgument,
          "checkpoint input dimension " + std::to_string(w.d) + " does not match environment (" +
              std::to_string(layout.dim()) + ")");
  EnergyPolicy policy;
  DeepSetParams actor;
  static_cast<TwoLayerWeights&>(actor) = std::move(w);
  policy.actor = std::move(actor);
  policy.action_set_size = env.num_actions();

  EvalReport r;
  r.episodes = episodes;
  r.greedy = estimate_value(env, policy, episodes, true, seed, 0x6576616cu);
  r.uniform = estimate_value(env, EnergyPolicy::uniform(env.num_actions()), episodes, false, seed,
                             0x6576616cu);
  std::ostringstream csv;
  csv << std::setprecision(17) << "policy,episodes,mean,std_error,ci95_low,ci95_high\n";
  for (const auto& [name, est] : {std::pair{"greedy", r.greedy}, std::pair{"uniform", r.uniform}}) {
    csv << name << ',' << episodes << ',' << est.mean << ',' << est.std_error << ','
        << est.mean - 1.96 * est.std_error << ',' << est.mean + 1.96 * est.std_error << '\n';
  }
  r.csv = csv.str();
  return r;
}

std::string oracle_dump(const std::string& env_spec, const std::string& out_dir) {
  const MeanFieldEnv env = resolve_env_spec(env_spec);
  const QuotientMDP q = build_quotient(env);
  const OptimalValue opt = optimal_value(q, 1e-12);
  const QTable qu = exact_q(q, uniform_class_policy(q));
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create '" + out_dir + "'");
  const fs::path dir(out_dir);
  {
    std::ofstream out = open_out(dir / "classes.csv");
    out << "class,self,counts\n";
    for (std::size_t c = 0; c < q.num_classes(); ++c) {
      out << c << ',' << q.classes[c].self << ',';
      for (std::size_t x = 0; x < q.classes[c].counts.size(); ++x)
        out << (x ? " " : "") << q.classes[c].counts[x];
      out << '\n';
    }
  }
  {
    std::ofstream out = open_out(dir / "v_star.csv");
    out << std::setprecision(17) << "class,v_star,greedy_action\n";
    for (std::size_t c = 0; c < q.num_classes(); ++c)
      out << c << ',' << opt.v[c] << ',' << opt.greedy[c] << '\n';
  }
  {
    std::ofstream out = open_out(dir / "q_uniform.csv");
    out << std::setprecision(17) << "class,action,q\n";
    for (std::size_t c = 0; c < q.num_classes(); ++c)
      for (std::size_t a = 0; a < q.num_actions; ++a) out << c << ',' << a << ',' << qu.at(c, a) << '\n';
  }
  std::ostringstream s;
  s << env.name() << ": " << q.num_classes() << " classes, " << q.num_actions
    << " actions, value iteration sweeps " << opt.history.size() << "; wrote classes.csv, "
    << "v_star.csv, q_uniform.csv to " << out_dir << "\n";
  return s.str();
}

std::string count_table(int max_n, int max_s, int abar) {
  require(max_n >= 1 && max_s >= 1 && abar >= 1, ErrorCode::kInvalidArgument,
          "count arguments must be >= 1");
  std::ostringstream out;
  out << "N,S,abar,classes,invariant_table_size,ordered_table_size\n";
  for (int n = 1; n <= max_n; ++n) {
    for (int s = 1; s <= max_s; ++s) {
      BigInt ordered = 1;
      for (int i = 0; i < n; ++i) ordered *= s;
      ordered *= BigInt(s) * abar;
      out << n << ',' << s << ',' << abar << ',' << class_count(n, s) << ','
          << count_invariant_table_size(n, s, abar) << ',' << ordered << '\n';
    }
  }
  return out.str();
}

std::string run_checks(const std::string& suite, std::uint64_t seed, const std::string& out_dir,
                       bool* all_passed) {
  const std::vector<CheckReport> reports = run_check_suite(suite, seed);
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    require(!ec, ErrorCode::kIo, "cannot create '" + out_dir + "'");
  }
  std::ostringstream text;
  bool ok = true;
  for (const auto& r : reports) {
    ok = ok && r.pass;
    text << (r.pass ? "PASS " : "FAIL ") << r.suite << ": " << r.summary << "\n";
    if (!out_dir.empty()) {
      std::ofstream out = open_out(fs::path(out_dir) / (r.suite + ".csv"));
      out << r.csv;
    }
  }
  if (all_passed) *all_passed = ok;
  return text.str();
}

}  // namespace mfppo
