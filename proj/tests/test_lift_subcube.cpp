#include <gtest/gtest.h>

#include <cmath>

#include "dlift/lift_dt.hpp"
#include "dlift/lift_subcube.hpp"
#include "dlift/planted.hpp"

using namespace dlift;

namespace {

struct Run {
  PlantedDecomposition planted;
  LabeledSample test;
  HypothesisMap map;
  FindSubcubeResult search;
  double eps_hat = 0.0;
};

Run planted_run(int n, int s, int d, std::uint64_t seed, double eps_a, std::uint64_t m_train,
                std::uint64_t m_test) {
  Run r{plant_random_partition(n, s, d, seed), LabeledSample(n), HypothesisMap(n), {}, 0.0};
  const auto dist = r.planted.labeled();
  const auto train = sample_counts(dist, m_train, derive_seed(seed, "train"));
  r.test = sample_counts(dist, m_test, derive_seed(seed, "test"));
  r.map = train_hypothesis_map(lowdegree(1), train, d, seed);
  r.search = find_subcube(r.test, r.map, eps_a, s);
  const SubcubePartition p = r.planted.partition();
  r.eps_hat = empirical_error(PartitionPredictor{p, r.map}, r.test);
  return r;
}

}  // namespace

TEST(Enumerate, SmallCounts) {
  EXPECT_EQ(enumerate_restrictions(2, 1).size(), 5u);
  ASSERT_EQ(enumerate_restrictions(4, 0).size(), 1u);
  EXPECT_EQ(enumerate_restrictions(4, 0)[0], Restriction::all(4));
  EXPECT_EQ(enumerate_restrictions(3, 3).size(), 27u);
  EXPECT_EQ(count_restrictions(3, 3), 1u + 6u + 12u + 8u);
}

TEST(IterationCap, Values) {
  EXPECT_EQ(iteration_cap(2, 0.01), 19u);
  EXPECT_EQ(iteration_cap(1, 0.5), 2u);
  EXPECT_GE(iteration_cap(1, 0.99), 1u);
  EXPECT_DOUBLE_EQ(greedy_error_bound(0.0, 0.1), 0.1);
}

TEST(FindSubcube, PerfectRootIsOneStep) {
  LabeledSample s(3);
  for (std::uint32_t x = 0; x < 8; ++x) s.add(Point(3, x), kPlus);
  HypothesisMap h(3);
  h.insert(Restriction::all(3), Hypothesis());
  const auto r = find_subcube(s, h, 0.05, 1);
  ASSERT_EQ(r.list.size(), 1u);
  EXPECT_EQ(r.list.entries[0], Restriction::all(3));
  EXPECT_EQ(r.error.mistakes, 0u);
  EXPECT_EQ(r.halt, HaltReason::ReachedTarget);
  EXPECT_EQ(r.final_remaining, 0.0);
}

TEST(FindSubcube, EligibilityThreshold) {
  // 20 points; "+***" is error-free, the root is always wrong
  const int n = 4;
  auto build = [&](int inside) {
    LabeledSample s(n);
    for (int i = 0; i < inside; ++i) s.add(Point(n, 1), kPlus);
    for (int i = inside; i < 20; ++i) s.add(Point(n, 0), kPlus);
    HypothesisMap h(n);
    h.insert(Restriction::all(n), Hypothesis::constant(kMinus));
    h.insert(Restriction::parse("+***"), Hypothesis());
    return find_subcube(s, h, 0.01, 2);
  };
  // 1/5 < 1/4: ineligible, the wrong root is taken
  const auto small = build(4);
  EXPECT_EQ(small.list.entries[0], Restriction::all(n));
  // 1/4 reaches the threshold and wins on error
  const auto enough = build(5);
  EXPECT_EQ(enough.list.entries[0], Restriction::parse("+***"));
}

TEST(FindSubcube, NoEligibleHalts) {
  const int n = 3;
  LabeledSample s(n);
  for (std::uint32_t x = 0; x < 8; ++x) s.add(Point(n, x), kPlus);
  HypothesisMap h(n);
  h.insert(Restriction::parse("+++"), Hypothesis());
  const auto r = find_subcube(s, h, 0.01, 1);
  EXPECT_EQ(r.halt, HaltReason::NoEligible);
  EXPECT_TRUE(r.list.entries.empty());
  EXPECT_EQ(r.error.mistakes, 8u);
  EXPECT_EQ(to_string(r.halt), "no-eligible");
}

TEST(FindSubcube, TwoPieceZeroErrorCoversWithinCap) {
  const int n = 5;
  // pieces x0=+ and x0=- with targets x1 and -x2
  LabeledSample s(n);
  for (std::uint32_t x = 0; x < 32; ++x) {
    const Point p(n, x);
    s.add(p, p[0] == kPlus ? p[1] : -p[2], 3);
  }
  HypothesisMap h(n);
  for (const auto& rho : enumerate_restrictions(n, 1)) {
    Hypothesis hyp = Hypothesis::parity(n, 0b11111);
    if (rho.encode() == "+****") hyp = Hypothesis::majority(n, {{1, kPlus}});
    if (rho.encode() == "-****") hyp = Hypothesis::majority(n, {{2, kMinus}});
    h.insert(rho, hyp);
  }
  const auto r = find_subcube(s, h, 0.01, 2);
  EXPECT_LE(r.list.size(), 19u);
  EXPECT_LE(r.final_remaining, 0.01);
  EXPECT_LE(r.error.value(), greedy_error_bound(0.0, 0.01));
  EXPECT_EQ(r.error.mistakes, 0u);
}

TEST(FindSubcube, TraceInvariantsOnPlantedRuns) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const int s = 1 + static_cast<int>(seed % 4);
    const int d = s == 1 ? static_cast<int>(seed % 3) : 1 + static_cast<int>(seed % 2);
    if (s > (1 << d)) continue;
    const double eps_a = 0.05;
    const auto r = planted_run(7, s, d, seed, eps_a, 3000, 800);
    const auto& run = r.search;
    EXPECT_NEAR(telescoped_error(run), run.error.value(), 1e-12);
    EXPECT_LE(run.trace.size(), iteration_cap(s, eps_a));
    if (run.halt == HaltReason::ReachedTarget) EXPECT_LE(run.final_remaining, eps_a);
    // geometric shrinkage
    for (std::size_t i = 0; i < run.trace.size(); ++i) {
      const double next = i + 1 < run.trace.size() ? run.trace[i + 1].remaining : run.final_remaining;
      EXPECT_LE(next, (1.0 - 1.0 / (2 * s)) * run.trace[i].remaining + 1e-12);
    }
    EXPECT_LE(run.error.value(), greedy_error_bound(r.eps_hat, eps_a) + 1e-12);
    // telescoped form with the measured ratio r_1 / r_k
    if (!run.trace.empty()) {
      const double ratio = run.trace.front().remaining / run.trace.back().remaining;
      EXPECT_LE(run.error.value(), eps_a + 2 * r.eps_hat * (1 + std::log(ratio)) + 1e-12);
    }
  }
}

TEST(GreedyCertificate, WitnessAtEveryIteration) {
  for (int s : {1, 2, 4}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const int d = s == 1 ? 0 : 2;
      const auto r = planted_run(6, s, d, 100 + seed, 0.02, 4000, 1000);
      const auto p = r.planted.partition();
      const auto w = greedy_certificate(r.test, r.map, p, r.search, r.eps_hat, s);
      ASSERT_EQ(w.size(), r.search.trace.size());
      for (const auto& step : w) {
        ASSERT_TRUE(step.piece.has_value()) << "s=" << s << " seed=" << seed;
        EXPECT_GE(step.coverage, 1.0 / (2 * s));
        EXPECT_LE(step.error, step.error_limit + 1e-12);
      }
    }
  }
}

TEST(PartitionLearn, DegenerateSingleCall) {
  const auto d = LabeledDistribution::from_labeler(DensePMF::uniform(4),
                                                   [](const Point& x) { return x[3]; });
  const auto r = partition_learn(lowdegree(1), 0, 1, 0.1, sample_counts(d, 2000, 1),
                                 sample_counts(d, 500, 2), 3);
  EXPECT_EQ(r.training.learner_calls, 1u);
  ASSERT_EQ(r.search.list.size(), 1u);
  EXPECT_EQ(true_error(ListPredictor{r.search.list, r.map}, d), 0.0);
  EXPECT_NEAR(r.learner_eps, 0.1 / std::log(10.0), 1e-15);
}

TEST(PartitionLearn, TwoPieceDepthOneAtDefaultSizes) {
  const int n = 6, s = 2, d = 1;
  const double eps = 0.1;
  const auto a = lowdegree(1, eps);
  const auto m_train = LiftSubcubeConfig::default_m_train(a, n, s, eps);
  const auto m_test = LiftSubcubeConfig::default_m_test(n, s, d, eps);
  double total = 0.0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    PlantOptions opts;
    opts.max_literals = 1;
    const auto planted = plant_random_partition(n, s, d, derive_seed(9, t), opts);
    const auto dist = planted.labeled();
    const auto r = partition_learn(a, d, s, eps, sample_counts(dist, m_train, derive_seed(t, "train")),
                                   sample_counts(dist, m_test, derive_seed(t, "test")), t);
    total += true_error(ListPredictor{r.search.list, r.map}, dist);
  }
  EXPECT_LE(total / trials, greedy_error_bound(eps, eps));
}

TEST(PartitionLearn, TribesBeatsDepthOneTrees) {
  const auto planted = plant_tribes(2, 2, 5);
  const auto dist = planted.labeled();
  const auto p = planted.partition();
  EXPECT_EQ(p.size(), 4u);
  // no depth-1 tree decomposes the Tribes distribution into uniform leaves
  const auto family = uniform_on_subcube_family();
  for (const auto& t : enumerate_trees(Restriction::all(4), 1)) {
    EXPECT_FALSE(is_tree_decomposition(dist.marginal(), t, family));
  }
  EXPECT_TRUE(is_partition_decomposition(dist.marginal(), p, family));
  const double eps = 0.1;
  double total = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto r = partition_learn(lowdegree(1, eps), 2, 4, eps, sample_counts(dist, 20000, t),
                                   sample_counts(dist, 4000, t + 50), t);
    total += true_error(ListPredictor{r.search.list, r.map}, dist);
  }
  EXPECT_LE(total / 20, greedy_error_bound(eps, eps));
}
