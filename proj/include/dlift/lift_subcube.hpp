#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dlift/core.hpp"
#include "dlift/decomposition.hpp"
#include "dlift/hypothesis.hpp"
#include "dlift/learners.hpp"
#include "dlift/lift_dt.hpp"

namespace dlift {

inline constexpr double kPartitionTestConstant = 4.0;

struct LiftSubcubeConfig {
  int d = 1;
  int s = 2;
  double eps = 0.05;
  double eps_additional = 0.0;  // 0 -> eps
  std::uint64_t m_train = 0;    // 0 -> default
  std::uint64_t m_test = 0;     // 0 -> default
  std::uint64_t master_seed = 0;

  // ceil((s ln(1/eps) / eps) * max(2 m(eps / ln(1/eps)), 8))
  static std::uint64_t default_m_train(const BaseLearner& a, int n, int s, double eps);
  // ceil(4 s d ln(n) ln^3(1/eps) / eps^2), with d counted as at least 1
  static std::uint64_t default_m_test(int n, int s, int d, double eps);
};

// ceil(2 s ln(1/eps_a)), at least 1.
std::uint64_t iteration_cap(int s, double eps_additional);

enum class HaltReason { ReachedTarget, IterationCap, NoEligible };
std::string to_string(HaltReason r);

struct GreedyStep {
  Restriction rho;
  double remaining = 0.0;  // r_i: remaining fraction before the step
  double error = 0.0;      // l_i: error of H(rho) on the covered remainder
  std::uint64_t covered = 0;
  ErrorCount piece_error;
};

struct FindSubcubeResult {
  SubcubeList list;
  std::vector<GreedyStep> trace;
  double final_remaining = 0.0;  // r_{k+1}
  HaltReason halt = HaltReason::ReachedTarget;
  std::uint64_t cap = 0;
  ErrorCount error;  // raw error of L o H on S_test, uncovered points counted wrong
};

// Greedy list construction over the restrictions stored in H. A restriction
// is eligible when 2s |(S_rem)_rho| >= |S_rem|; among eligible ones the lowest
// error on (S_rem)_rho wins, ties in canonical order.
FindSubcubeResult find_subcube(const LabeledSample& test, const HypothesisMap& h,
                               double eps_additional, int s);

// r_{k+1} + sum_i (r_i - r_{i+1}) l_i
double telescoped_error(const FindSubcubeResult& r);
// eps_hat (2 + 2 ln(1/eps_a)) + eps_a
double greedy_error_bound(double eps_hat, double eps_additional);

struct PartitionLearnResult {
  FindSubcubeResult search;
  HypothesisMap map;
  TrainingStats training;
  double learner_eps = 0.0;
};

// Training runs at learner target eps / ln(1/eps) (recorded only; the map
// is trained on the given sample), then the greedy search with eps_a = eps.
PartitionLearnResult partition_learn(const BaseLearner& a, int d, int s, double eps,
                                     const LabeledSample& train, const LabeledSample& test,
                                     std::uint64_t master_seed = 0);

// L o H as a partial predictor.
struct ListPredictor {
  const SubcubeList& list;
  const HypothesisMap& h;
  std::optional<Label> operator()(const Point& x) const { return eval_list_hypothesis(list, h, x); }
};

// P o H with points outside P predicted as nullopt.
struct PartitionPredictor {
  const SubcubePartition& p;
  const HypothesisMap& h;
  std::optional<Label> operator()(const Point& x) const;
};

struct GreedyWitness {
  std::size_t iteration = 0;
  double remaining = 0.0;
  std::optional<Restriction> piece;
  double coverage = 0.0;
  double error = 0.0;
  double error_limit = 0.0;
};

// For the S_rem before every step of `run`, a piece of `p` with coverage at
// least 1/(2s) and error at most 2 eps_hat |S| / |S_rem|. `piece` is empty
// when none exists.
std::vector<GreedyWitness> greedy_certificate(const LabeledSample& test, const HypothesisMap& h,
                                              const SubcubePartition& p,
                                              const FindSubcubeResult& run, double eps_hat, int s);

}  // namespace dlift
