#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dlift/core.hpp"
#include "dlift/distributions.hpp"
#include "dlift/hypothesis.hpp"

namespace dlift {

// The black-box base learner A. learn must be deterministic in (sample, seed).
struct BaseLearner {
  std::string name;
  std::function<Hypothesis(const LabeledSample&, std::uint64_t)> learn;
  // m(n, eps): samples needed for expected error eps at dimension n.
  std::function<std::uint64_t(int, double)> sample_complexity;
  BaseFamily family;
  double eps = 0.05;
  double robustness = std::numeric_limits<double>::infinity();

  // Applies the empty-sample convention (constant +1) before calling learn.
  Hypothesis operator()(const LabeledSample& s, std::uint64_t seed) const;
  std::uint64_t m(int n, double target_eps) const { return sample_complexity(n, target_eps); }
};

// Majority label; ties go to +1.
Hypothesis plurality_learner(const LabeledSample& s, std::uint64_t seed = 0);
// Sign of the empirical degree-<=k Fourier expansion over the free coordinates
// of the smallest subcube containing the sample. Coefficients are kept as
// integer correlation sums, so evaluation is exact.
Hypothesis lowdegree_learner(const LabeledSample& s, int k, std::uint64_t seed = 0);
// Majority label per seen point; unseen points get +1.
Hypothesis memorizing_learner(const LabeledSample& s, std::uint64_t seed = 0);

inline constexpr double kLowDegreeConstant = 8.0;

BaseLearner plurality(double eps = 0.05);
// m(eps) = 8 n^k ln(n) / eps^2.
BaseLearner lowdegree(int k, double eps = 0.05);
// m(eps) = 2^n ln(2^n / eps): enough draws to see every point of a uniform
// cube with probability 1 - eps.
BaseLearner memorizing(double eps = 0.05);

// "plurality", "memorize", "lowdegree" (k = 1) or "lowdegree-<k>".
BaseLearner make_learner(const std::string& name, double eps = 0.05);
std::vector<std::string> learner_names();

inline constexpr double kBoostCopies = 2.0;     // copies = ceil(2 ln(1/delta))
inline constexpr double kBoostTestScale = 8.0;  // test_size = ceil(8 ln(1/delta) / eps^2)

struct BoostConfig {
  double eps = 0.1;
  double delta = 0.1;
  int copies = 1;
  std::uint64_t test_size = 0;

  static BoostConfig make(double eps, double delta);
  // copies * m_per_copy + test_size
  std::uint64_t required(std::uint64_t m_per_copy) const;
};

struct BoostResult {
  Hypothesis hypothesis;
  int chosen = 0;
  std::vector<ErrorCount> validation;
};

// Runs `copies` copies of A on disjoint consecutive slices of `source` (taken
// in draw order, m_per_copy each), then keeps the copy with the fewest
// mistakes on the following test_size draws. Copy i uses seed
// derive_seed(seed, i). Throws UsageError naming the required size when
// `source` is too small.
BoostResult boost(const BaseLearner& a, const BoostConfig& cfg, const LabeledSample& source,
                  std::uint64_t m_per_copy, std::uint64_t seed);

}  // namespace dlift
