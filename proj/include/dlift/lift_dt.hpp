#pragma once

#include <cstdint>

#include "dlift/core.hpp"
#include "dlift/decomposition.hpp"
#include "dlift/hypothesis.hpp"
#include "dlift/learners.hpp"

namespace dlift {

inline constexpr double kTreeTestConstant = 4.0;

struct LiftDtConfig {
  int d = 1;
  double eps = 0.05;
  std::uint64_t m_train = 0;  // 0 -> default
  std::uint64_t m_test = 0;   // 0 -> default
  std::uint64_t master_seed = 0;
  bool memoize = true;

  // ceil((2^d / eps) * max(2 m(eps), 8))
  static std::uint64_t default_m_train(const BaseLearner& a, int n, int d, double eps);
  // ceil(4 * 2^d * ln(n) / eps^2)
  static std::uint64_t default_m_test(int n, int d, double eps);
};

struct TrainingStats {
  std::uint64_t learner_calls = 0;
  std::uint64_t empty_samples = 0;
  double seconds = 0.0;
};

// h_rho = A((S_train)_rho, derive_seed(master_seed, rho.encode())) for every
// restriction of depth <= d.
HypothesisMap train_hypothesis_map(const BaseLearner& a, const LabeledSample& train, int d,
                                   std::uint64_t master_seed, TrainingStats* stats = nullptr);

struct FindTreeStats {
  std::uint64_t invocations = 0;  // calls of the recursive procedure
  std::uint64_t memo_hits = 0;
  std::uint64_t leaf_evaluations = 0;
};

struct FindTreeResult {
  DecisionTree tree;
  ErrorCount error;  // raw error on (S_test)_rho
};

// Depth-d tree below rho minimizing raw error of T o H on (S_test)_rho, over
// all trees splitting free coordinates of rho. Ties go to the smallest
// coordinate. Throws UsageError if d exceeds the free coordinates of rho.
FindTreeResult find_tree(const LabeledSample& test, int d, const HypothesisMap& h,
                         const Restriction& rho, FindTreeStats* stats = nullptr,
                         bool memoize = true);

struct TreeLearnResult {
  DecisionTree tree;
  HypothesisMap map;
  Hypothesis hypothesis;
  ErrorCount test_error;
  TrainingStats training;
  FindTreeStats search;
};

TreeLearnResult tree_learn(const BaseLearner& a, const LabeledSample& train,
                           const LabeledSample& test, int d, std::uint64_t master_seed = 0,
                           bool memoize = true);

// Calls made by the memo-free recursion from the all-* root:
// sum_j 2^j n!/(n-j)!.
std::uint64_t count_findtree_calls(int n, int d);
// 1 + 2n + ... + (2n)^d
std::uint64_t findtree_call_bound(int n, int d);

}  // namespace dlift
