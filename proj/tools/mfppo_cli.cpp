// mfppo: train, check, eval, count, oracle-dump.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mfppo/mfppo.h"

namespace {

struct Text {
  mfppo_text* p = nullptr;
  ~Text() { mfppo_text_free(p); }
  const char* str() const { return mfppo_text_data(p); }
};

int exit_code(mfppo_status s) {
  if (s == MFPPO_OK) return 0;
  std::cerr << "mfppo: " << mfppo_last_error() << "\n";
  return s == MFPPO_NUMERIC ? 3 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field PPO with DeepSet actor/critic networks and exact small-instance oracles"};
  app.require_subcommand(1);

  std::string config, out, suite, checkpoint, env_spec;
  uint64_t seed = 0;
  int checkpoint_every = -1;
  int episodes = 100;
  int agents = 0, states = 0, actions = 1;
  bool table = false;

  auto* train = app.add_subcommand("train", "run MF-PPO from a config file");
  train->add_option("--config", config, "run config (INI)")->required();
  auto* train_seed = train->add_option("--seed", seed, "override [run] seed");
  train->add_option("--out", out, "override [run] out directory");
  train->add_option("--checkpoint-every", checkpoint_every, "write checkpoints every n iterations");

  auto* check = app.add_subcommand("check", "run oracle/property check suites");
  check->add_option("--suite", suite,
                    "invariance, gradients, counting, prop4, td-oracle, linearization or all")
      ->required();
  check->add_option("--seed", seed, "random seed");
  check->add_option("--out", out, "directory for per-suite CSV reports");

  auto* eval = app.add_subcommand("eval", "greedy evaluation of an actor checkpoint");
  eval->add_option("--checkpoint", checkpoint, "actor checkpoint")->required();
  eval->add_option("--env", env_spec, "scenario name or run config")->required();
  eval->add_option("--episodes", episodes, "evaluation episodes");
  eval->add_option("--seed", seed, "random seed");
  eval->add_option("--out", out, "CSV output path");

  auto* count = app.add_subcommand("count", "permutation-invariant table sizes");
  count->add_option("--agents", agents, "N (or max N with --table)")->required();
  count->add_option("--states", states, "|S| (or max |S| with --table)")->required();
  count->add_option("--actions", actions, "|Abar|");
  count->add_flag("--table", table, "CSV table over 1..N x 1..|S|");

  auto* dump = app.add_subcommand("oracle-dump", "dump quotient classes, V* and Q of uniform");
  dump->add_option("--env", env_spec, "scenario name or run config")->required();
  dump->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*train) {
    mfppo_train_options opt{};
    opt.has_seed = train_seed->count() > 0 ? 1 : 0;
    opt.seed = seed;
    opt.out_dir = out.empty() ? nullptr : out.c_str();
    opt.checkpoint_every = checkpoint_every;
    Text summary;
    const mfppo_status s = mfppo_train(config.c_str(), &opt, &summary.p);
    if (s != MFPPO_OK) return exit_code(s);
    std::cout << summary.str();
    return 0;
  }
  if (*check) {
    Text report;
    int pass = 0;
    const mfppo_status s =
        mfppo_check(suite.c_str(), seed, out.empty() ? nullptr : out.c_str(), &pass, &report.p);
    if (s != MFPPO_OK) return exit_code(s);
    std::cout << report.str();
    return pass ? 0 : 1;
  }
  if (*eval) {
    Text csv;
    const mfppo_status s = mfppo_eval(checkpoint.c_str(), env_spec.c_str(), episodes, seed, &csv.p);
    if (s != MFPPO_OK) return exit_code(s);
    std::cout << csv.str();
    if (!out.empty()) {
      std::ofstream f(out, std::ios::binary);
      if (!f) {
        std::cerr << "mfppo: cannot write '" << out << "'\n";
        return 2;
      }
      f << csv.str();
    }
    return 0;
  }
  if (*count) {
    Text text;
    const mfppo_status s = table ? mfppo_count_table(agents, states, actions, &text.p)
                                 : mfppo_count(agents, states, actions, &text.p);
    if (s != MFPPO_OK) return exit_code(s);
    std::cout << text.str() << (table ? "" : "\n");
    return 0;
  }
  if (*dump) {
    Text summary;
    const mfppo_status s = mfppo_oracle_dump(env_spec.c_str(), out.c_str(), &summary.p);
    if (s != MFPPO_OK) return exit_code(s);
    std::cout << summary.str();
    return 0;
  }
  return 2;
}
