#ifndef MFPPO_SYMMETRY_HPP
#define MFPPO_SYMMETRY_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "mfppo/mf_core.hpp"

namespace mfppo {

using BigInt = boost::multiprecision::cpp_int;

// A bijection on {0, ..., N-1}.
class Permutation {
 public:
  explicit Permutation(std::vector<std::size_t> mapping);
  static Permutation identity(std::size_t n);
  static Permutation random(std::size_t n, Rng& rng);

  std::size_t size() const { return mapping_.size(); }
  std::size_t operator[](std::size_t i) const { return mapping_[i]; }

 private:
  std::vector<std::size_t> mapping_;
};

// output[i] = config[perm[i]]
JointConfig apply_permutation(const JointConfig& config, const Permutation& perm);

// Number of multisets of size n over s_card symbols, written as
// sum_{k=1}^{min(s_card, n)} C(n-1, k-1) C(s_card, k).
BigInt class_count(std::int64_t n, std::int64_t s_card);

// class_count(n, s_card) * s_card * abar_card: the tabular size of a
// permutation-invariant actor or critic.
BigInt count_invariant_table_size(std::int64_t n, std::int64_t s_card, std::int64_t abar_card);

// One sorted representative per permutation-equivalence class of S^N, in
// lexicographic order. Rejects instances with s_card^n > 1e7.
std::vector<JointConfig> enumerate_classes(int n, int s_card);

struct InvarianceReport {
  double max_violation = 0.0;
  bool pass = true;
};

using ObservationFunction = std::function<double(const MfObservation&, std::size_t action_id)>;

// Samples (config, abar, perm) triples with the acting agent drawn uniformly,
// and compares f on the original and the permuted population.
InvarianceReport audit_invariance(const MeanFieldEnv& env, const ObservationFunction& f,
                                  int trials, double tolerance, Rng& rng);

}  // namespace mfppo

#endif  // MFPPO_SYMMETRY_HPP
