#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(MFPPO_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "mfppo_cli_test";
  fs::create_directories(p);
  return p;
}

std::string write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p.string();
}

}  // namespace

TEST_CASE("count") {
  const Result r = run("count --agents 4 --states 3 --actions 2");
  CHECK(r.code == 0);
  CHECK(r.out == "90\n");
  const Result t = run("count --agents 2 --states 2 --actions 2 --table");
  CHECK(t.code == 0);
  CHECK(t.out.find("2,2,2,3,12,16") != std::string::npos);
  CHECK(run("count --agents 0 --states 3").code == 2);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("train").code == 2);
  CHECK(run("count --agents x --states 2").code == 2);
}

TEST_CASE("check") {
  const Result ok = run("check --suite counting");
  CHECK(ok.code == 0);
  CHECK(ok.out.rfind("PASS counting", 0) == 0);
  CHECK(run("check --suite bogus").code == 2);
}

TEST_CASE("train") {
  const fs::path dir = scratch();
  CHECK(run("train --config " + (dir / "missing.ini").string()).code == 2);
  const std::string no_env = write(dir / "no_env.ini", "[run]\nseed = 1\n");
  CHECK(run("train --config " + no_env).code == 2);
  const std::string bad_env = write(dir / "bad_env.ini", "[run]\nenv = nowhere\n");
  CHECK(run("train --config " + bad_env).code == 2);
  const std::string typo = write(dir / "typo.ini", "[run]\nenv = tab-3-n4\n[schedule]\nKay = 2\n");
  CHECK(run("train --config " + typo).code == 2);

  // A vanishing proximity weight overflows the improvement target.
  const std::string blowup = write(dir / "blowup.ini",
                                   "[run]\nenv = tab-3-n4\neval_episodes = 1\n[schedule]\nK = 1\nT = 5\n"
                                   "upsilon = 1e-310\nm_actor = 4\nm_critic = 4\n");
  CHECK(run("train --config " + blowup + " --out " + (dir / "blowup").string()).code == 3);

  const std::string good = write(dir / "good.ini",
                                 "[run]\nenv = nav-3x3-n2\neval_episodes = 2\n[schedule]\nK = 16\nT = 20\n"
                                 "m_actor = 8\nm_critic = 8\n");
  const fs::path out = dir / "good";
  CHECK(run("train --config " + good + " --out " + out.string() + " --seed 4 --checkpoint-every 8").code == 0);
  std::ifstream metrics(out / "metrics.csv");
  int lines = 0;
  for (std::string l; std::getline(metrics, l);) ++lines;
  CHECK(lines == 17);
  CHECK(fs::exists(out / "actor_k0007.bin"));
  CHECK(fs::exists(out / "actor_k0015.bin"));

  const Result e = run("eval --checkpoint " + (out / "actor.bin").string() + " --env nav-3x3-n2 --episodes 4 --seed 2");
  CHECK(e.code == 0);
  CHECK(e.out.rfind("policy,episodes,mean,std_error,ci95_low,ci95_high\n", 0) == 0);
  CHECK(run("eval --checkpoint " + (out / "actor.bin").string() + " --env nav-3x3-n2 --episodes 4 --seed 2").out == e.out);
  CHECK(run("eval --checkpoint " + (out / "actor.bin").string() + " --env nav-3x3-n2 --episodes 0").code == 2);
  CHECK(run("eval --checkpoint " + (out / "actor.bin").string() + " --env nav-4x4-n4").code == 2);
  CHECK(run("eval --checkpoint " + (dir / "nope.bin").string() + " --env nav-3x3-n2").code == 2);

  const Result d = run("oracle-dump --env tab-3-n4 --out " + (dir / "dump").string());
  CHECK(d.code == 0);
  CHECK(fs::exists(dir / "dump" / "v_star.csv"));
  fs::remove_all(dir);
}
