#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlift/core.hpp"
#include "dlift/decomposition.hpp"
#include "dlift/distributions.hpp"

namespace dlift {

// A uniformly random subset of exactly 2^(n-1) points.
struct HalfSupport {
  int n = 0;
  std::vector<std::uint32_t> members;  // sorted
  std::vector<bool> contains;          // indexed by point bits

  DensePMF distribution() const;  // uniform on members
  static HalfSupport from_members(int n, std::vector<std::uint32_t> members);
};

// Seeded partial Fisher-Yates shuffle of the 2^n points.
HalfSupport draw_half_support(int n, std::uint64_t seed);

struct RestrictionCount {
  Restriction rho;
  std::uint64_t count = 0;
};

struct ConcentrationReport {
  int n = 0;
  int d = 0;
  std::uint64_t checked = 0;  // restrictions of depth <= d examined
  std::vector<RestrictionCount> counts;      // filled only when requested
  std::vector<RestrictionCount> violations;  // count outside [1/3, 2/3] * 2^(n-depth)
};

// Exact count(l) = |S intersect l| for every l of depth <= d. Uses a ternary
// sum transform over all 3^n patterns when that is cheaper (n <= 13) and a
// per-fixed-mask histogram otherwise.
ConcentrationReport count_concentration_check(const HalfSupport& s, int d,
                                              bool keep_counts = false);

// 1/3 when the report has no violations.
std::optional<double> tv_lowerbound_certificate(const ConcentrationReport& report);

// n - ceil(c log2 n), floored at 0.
int default_lowerbound_depth(int n, double c = 3.0);

// How a decomposable D' may behave inside a leaf.
enum class LeafModel {
  Constant,  // uniform over the whole leaf
  Subcube,   // uniform over any subcube of the leaf
};

struct MinTvResult {
  double min_tv = 1.0;
  DecisionTree tree;
  std::uint64_t trees_checked = 0;
};

// Exhaustive min over depth-d trees and leaf weights of TV(D_S, D'), via
// TV = 1 - max overlap and a fractional fill of the leaves by density.
// Small n only (n <= 5).
MinTvResult min_tv_to_decomposable(const HalfSupport& s, int d,
                                   LeafModel model = LeafModel::Constant);

// A distinguisher sees m sample points and answers 0 or 1.
using Distinguisher = std::function<int(std::span<const std::uint32_t>, int n)>;

Distinguisher make_distinguisher(const std::string& name);
std::vector<std::string> distinguisher_names();

// First k coordinates histogram; answers 1 when the chi-square statistic
// exceeds 2^k - 1.
int chi2_prefix_distinguisher(std::span<const std::uint32_t> samples, int n, int k = 4);
int collision_distinguisher(std::span<const std::uint32_t> samples, int n);

bool has_collision(std::span<const std::uint32_t> samples);

struct CollisionReport {
  int n = 0;
  std::uint64_t m = 0;
  std::uint64_t trials = 0;
  double p_collision_uniform = 0.0;
  double p_collision_half = 0.0;
  double sigma_uniform = 0.0;
  double sigma_half = 0.0;
  double bound_uniform = 0.0;  // C(m,2) / 2^n
  double bound_half = 0.0;     // 2 C(m,2) / 2^n
  bool within_bounds = false;  // both rates <= 2 C(m,2)/2^n + 5 sigma
  std::string distinguisher;
  double accept_uniform = 0.0;
  double accept_half = 0.0;
  double advantage = 0.0;
};

// Each trial draws m points from the uniform cube and m points from D_S for a
// fresh random half support S.
CollisionReport collision_experiment(int n, std::uint64_t m, std::uint64_t trials,
                                     std::uint64_t seed,
                                     const std::string& distinguisher = "chi2-prefix");

struct HoeffdingReport {
  double tail_without_replacement = 0.0;
  double tail_with_replacement = 0.0;
  double bound = 0.0;  // 2 exp(-2 eps^2 n)
  double sigma = 0.0;
};

// Empirical Pr[|X - mu| >= n_draws * eps] for sums of n_draws population
// values drawn without (and, for comparison, with) replacement.
HoeffdingReport hoeffding_wor_check(std::span<const double> population, std::uint64_t n_draws,
                                    double eps, std::uint64_t trials, std::uint64_t seed);

}  // namespace dlift
