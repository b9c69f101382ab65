#ifndef MFPPO_CHECKS_HPP
#define MFPPO_CHECKS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mfppo/mf_core.hpp"
#include "mfppo/oracle.hpp"
#include "mfppo/trainer.hpp"

namespace mfppo {

struct CheckReport {
  std::string suite;
  bool pass = false;
  std::string summary;   // one human-readable line
  std::string csv;       // header + rows
  double seconds = 0.0;
};

CheckReport check_invariance(std::uint64_t seed, int cases = 1000);
CheckReport check_gradients(std::uint64_t seed, int points = 500);
CheckReport check_counting();
CheckReport check_prop4(std::uint64_t seed, int triples = 1000);

struct TdOracleOptions {
  std::string env = "tab-3-n4";
  std::size_t m = 512;
  int T = 5000;
  int seeds = 5;
  double radius = 10.0;
  double tolerance = 0.05;
};
// sigma-weighted RMSE of the learned critic of the uniform policy against
// exact_q, median over seeds.
CheckReport check_td_oracle(std::uint64_t seed, const TdOracleOptions& opt = {});
CheckReport check_linearization(std::uint64_t seed, int seeds = 10, double radius = 1.0);

const std::vector<std::string>& check_suite_names();
// One report per suite; "all" runs every suite. Unknown names throw.
std::vector<CheckReport> run_check_suite(const std::string& name, std::uint64_t seed);

// Relative optimality gap (L* - L(pi)) / |L*| where L(pi) is the value of
// pi averaged over nu*, the class law after the burn-in under pi*.
struct GapOracle {
  QuotientMDP q;
  OptimalValue opt;
  std::vector<double> nu_star;
  double l_star = 0.0;
};
GapOracle make_gap_oracle(const MeanFieldEnv& env, int burn_in);
double optimality_gap(const GapOracle& oracle, const ClassPolicy& policy);

double median(std::vector<double> v);

}  // namespace mfppo

#endif  // MFPPO_CHECKS_HPP
