#include <gtest/gtest.h>

#include <cmath>

#include "dlift/distributions.hpp"
#include "dlift/errors.hpp"
#include "support/oracles.hpp"

using namespace dlift;

namespace {

DensePMF random_pmf(int n, Philox4x32& g, double zero_prob = 0.0) {
  std::vector<double> m(std::size_t{1} << n);
  double sum = 0.0;
  for (auto& v : m) {
    v = g.unit() < zero_prob ? 0.0 : g.unit();
    sum += v;
  }
  if (sum == 0.0) m[0] = sum = 1.0;
  for (auto& v : m) v /= sum;
  return DensePMF(n, m);
}

DecisionTree random_tree(const Restriction& root, int d, Philox4x32& g) {
  std::vector<int> free;
  for (int i = 0; i < root.dim(); ++i) {
    if (root.is_free(i)) free.push_back(i);
  }
  if (d == 0 || free.empty() || g.below(4) == 0) return DecisionTree::leaf();
  const int i = free[g.below(free.size())];
  return DecisionTree::split(i, random_tree(root.refine(i, kMinus), d - 1, g),
                             random_tree(root.refine(i, kPlus), d - 1, g));
}

LabeledDistribution labeled_by_first(const DensePMF& d) {
  return LabeledDistribution::from_labeler(d, [](const Point& x) { return x[0]; });
}

}  // namespace

TEST(DensePMF, Validation) {
  EXPECT_THROW(DensePMF(1, {0.5, 0.6}), UsageError);
  EXPECT_THROW(DensePMF(1, {1.5, -0.5}), UsageError);
  EXPECT_THROW(DensePMF(2, {1.0, 0.0}), UsageError);
  EXPECT_NO_THROW(DensePMF(1, {0.25, 0.75}));
}

TEST(DensePMF, JsonRoundTrip) {
  Philox4x32 g(1);
  const auto d = random_pmf(4, g);
  const auto back = DensePMF::from_json(d.to_json());
  for (std::uint32_t x = 0; x < 16; ++x) EXPECT_DOUBLE_EQ(back[x], d[x]);
}

TEST(TvDistance, SmallValues) {
  EXPECT_DOUBLE_EQ(tv_distance(DensePMF::uniform(3), DensePMF::uniform(3)), 0.0);
  EXPECT_DOUBLE_EQ(tv_distance(DensePMF::uniform(1), DensePMF::point_mass(Point::parse("+"))),
                   0.5);
  // uniform vs uniform on any half-size support
  Philox4x32 g(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(g.below(6));
    std::vector<std::uint32_t> all(1u << n);
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    for (std::size_t i = 0; i + 1 < all.size(); ++i) {
      std::swap(all[i], all[i + g.below(all.size() - i)]);
    }
    std::vector<double> m(all.size(), 0.0);
    for (std::size_t i = 0; i < all.size() / 2; ++i) m[all[i]] = 2.0 / all.size();
    EXPECT_NEAR(tv_distance(DensePMF::uniform(n), DensePMF(n, m)), 0.5, 1e-12);
  }
}

TEST(TvDistance, MetricProperties) {
  Philox4x32 g(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(g.below(5));
    const auto a = random_pmf(n, g, 0.3), b = random_pmf(n, g, 0.3), c = random_pmf(n, g);
    EXPECT_EQ(tv_distance(a, b), tv_distance(b, a));
    EXPECT_LE(tv_distance(a, c), tv_distance(a, b) + tv_distance(b, c) + 1e-12);
    EXPECT_EQ(tv_distance(a, a), 0.0);
    EXPECT_GE(tv_distance(a, b), 0.0);
    EXPECT_LE(tv_distance(a, b), 1.0 + 1e-12);
    std::vector<double> av(a.mass().begin(), a.mass().end());
    std::vector<double> bv(b.mass().begin(), b.mass().end());
    EXPECT_NEAR(tv_distance(a, b), oracle::tv(av, bv), 1e-15);
  }
}

TEST(Restrict, UniformAndComposition) {
  const auto u = DensePMF::uniform(3);
  const auto r = restrict_dist(u, Restriction::parse("*+*"));
  for (std::uint32_t x = 0; x < 8; ++x) EXPECT_DOUBLE_EQ(r[x], (x & 2) ? 0.25 : 0.0);
  EXPECT_DOUBLE_EQ(mass_of(u, Restriction::parse("+-*")), 0.25);
  EXPECT_DOUBLE_EQ(mass_of(u, Restriction::all(3)), 1.0);
  Philox4x32 g(4);
  const auto d = random_pmf(4, g);
  const auto twice = restrict_dist(restrict_dist(d, Restriction::parse("+***")),
                                   Restriction::parse("***-"));
  const auto once = restrict_dist(d, Restriction::parse("+**-"));
  for (std::uint32_t x = 0; x < 16; ++x) EXPECT_NEAR(twice[x], once[x], 1e-15);
  EXPECT_THROW(restrict_dist(DensePMF::point_mass(Point::parse("++")), Restriction::parse("-*")),
               ConditioningOnNull);
}

TEST(Restrict, ProductFixesCoordinate) {
  const std::vector<double> p{0.2, 0.7, 0.4};
  const auto d = DensePMF::product(3, p);
  const auto r = restrict_dist(d, Restriction::parse("*-*"));
  const std::vector<double> q{0.2, 0.0, 0.4};
  const auto expected = DensePMF::product(3, q);
  for (std::uint32_t x = 0; x < 8; ++x) EXPECT_NEAR(r[x], expected[x], 1e-15);
}

TEST(Compose, TreeMixtureArithmetic) {
  const auto t = DecisionTree::split(0, {}, {});
  const std::vector<double> w{0.4, 0.6};
  const std::vector<DensePMF> leaves{DensePMF::uniform_on(Restriction::parse("-*")),
                                     DensePMF::uniform_on(Restriction::parse("+*"))};
  const auto d = compose_tree_dist(t, w, leaves);
  // bit 0 is x_0: index 0 = (-,-), 1 = (+,-), 2 = (-,+), 3 = (+,+)
  EXPECT_NEAR(d[0], 0.2, 1e-15);
  EXPECT_NEAR(d[2], 0.2, 1e-15);
  EXPECT_NEAR(d[1], 0.3, 1e-15);
  EXPECT_NEAR(d[3], 0.3, 1e-15);
  EXPECT_NEAR(mass_of(d, Restriction::parse("+*")), 0.6, 1e-15);
  EXPECT_TRUE(is_tree_decomposition(d, t, uniform_on_subcube_family()));
  const std::vector<DensePMF> single{DensePMF::uniform(2)};
  const std::vector<double> one{1.0};
  const auto flat = compose_tree_dist(DecisionTree::leaf(), one, single);
  EXPECT_EQ(tv_distance(flat, DensePMF::uniform(2)), 0.0);
  const std::vector<DensePMF> leaky{DensePMF::uniform(2), DensePMF::uniform_on(Restriction::parse("+*"))};
  EXPECT_THROW(compose_tree_dist(t, w, leaky), ConstructionError);
}

TEST(Compose, RestrictOntoLeafReproducesPlantedLeaf) {
  Philox4x32 g(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(g.below(4));
    const auto t = random_tree(Restriction::all(n), 3, g);
    const auto leaves = t.leaves(n);
    std::vector<double> w;
    std::vector<DensePMF> ds;
    double sum = 0.0;
    for (const auto& l : leaves) {
      w.push_back(0.1 + g.unit());
      sum += w.back();
      std::vector<double> biases(n);
      for (int i = 0; i < n; ++i) biases[i] = l.is_free(i) ? g.unit() : (l.value(i) == kPlus ? 1.0 : 0.0);
      ds.push_back(DensePMF::product(n, biases));
    }
    for (auto& v : w) v /= sum;
    const auto d = compose_tree_dist(t, w, ds);
    for (std::size_t k = 0; k < leaves.size(); ++k) {
      EXPECT_NEAR(mass_of(d, leaves[k]), w[k], 1e-12);
      const auto r = restrict_dist(d, leaves[k]);
      for (std::uint32_t x = 0; x < (1u << n); ++x) ASSERT_NEAR(r[x], ds[k][x], 1e-12);
    }
    EXPECT_TRUE(is_tree_decomposition(d, t, product_on_subcube_family()));
  }
}

TEST(Compose, PartitionMixture) {
  SubcubePartition p{{Restriction::parse("+*"), Restriction::parse("-+")}, 2};
  const std::vector<double> w{0.5, 0.5};
  const std::vector<DensePMF> ds{DensePMF::uniform_on(p.pieces[0]), DensePMF::uniform_on(p.pieces[1])};
  const auto d = compose_partition_dist(p, w, ds);
  EXPECT_NEAR(d[1], 0.25, 1e-15);
  EXPECT_NEAR(d[3], 0.25, 1e-15);
  EXPECT_NEAR(d[2], 0.5, 1e-15);
  EXPECT_EQ(d[0], 0.0);
  EXPECT_TRUE(is_partition_decomposition(d, p, uniform_on_subcube_family()));
  SubcubePartition overlap{{Restriction::parse("+*"), Restriction::parse("++")}, 2};
  EXPECT_THROW(compose_partition_dist(overlap, w, ds), ConstructionError);
}

TEST(Families, RestrictionClosureExhaustive) {
  Philox4x32 g(6);
  for (int n = 1; n <= 8; ++n) {
    const auto uf = uniform_on_subcube_family();
    const auto pf = product_on_subcube_family();
    const std::vector<double> biases = [&] {
      std::vector<double> b(n);
      for (auto& v : b) v = g.below(5) == 0 ? (g.below(2) ? 1.0 : 0.0) : g.unit();
      return b;
    }();
    const auto prod = DensePMF::product(n, biases);
    EXPECT_TRUE(pf.contains(prod));
    EXPECT_FALSE(find_restriction_closure_failure(pf, prod).has_value()) << n;
    const Restriction sub(n, 1u, 1u);
    const auto uni = DensePMF::uniform_on(sub);
    EXPECT_TRUE(uf.contains(uni));
    EXPECT_FALSE(find_restriction_closure_failure(uf, uni).has_value()) << n;
    EXPECT_TRUE(pf.contains(uni));
  }
  // a non-member
  const DensePMF skew(2, {0.1, 0.2, 0.3, 0.4});
  EXPECT_FALSE(uniform_on_subcube_family().contains(skew));
  EXPECT_FALSE(product_on_subcube_family().contains(skew));
  EXPECT_FALSE(uniform_on_subcube_family().contains(DensePMF(2, {0.5, 0.0, 0.0, 0.5})));
  EXPECT_EQ(family_by_name("product").name, product_on_subcube_family().name);
}

TEST(Sample, EmptyDeterministicAndCompacted) {
  const auto d = labeled_by_first(DensePMF::uniform(4));
  EXPECT_TRUE(sample(d, 0, 1).empty());
  const auto a = sample(d, 500, 9), b = sample(d, 500, 9), c = sample(d, 500, 10);
  ASSERT_EQ(a.items().size(), b.items().size());
  bool differs = false;
  for (std::size_t i = 0; i < a.items().size(); ++i) {
    EXPECT_EQ(a.items()[i].x, b.items()[i].x);
    differs |= !(a.items()[i].x == c.items()[i].x);
  }
  EXPECT_TRUE(differs);
  const auto compact = sample_counts(d, 500, 9);
  EXPECT_EQ(compact.size(), 500u);
  std::vector<std::uint64_t> ca(32, 0), cb(32, 0);
  for (const auto& e : a.items()) ca[LabeledDistribution::cell(e.x.bits(), e.y)] += e.count;
  for (const auto& e : compact.items()) cb[LabeledDistribution::cell(e.x.bits(), e.y)] += e.count;
  EXPECT_EQ(ca, cb);
}

TEST(Sample, FrequenciesWithinFiveSigma) {
  Philox4x32 g(7);
  const auto base = random_pmf(4, g, 0.2);
  const auto d = labeled_by_first(base);
  const std::uint64_t m = 100000;
  const auto s = sample_counts(d, m, 11);
  std::vector<double> freq(16, 0.0);
  for (const auto& e : s.items()) {
    freq[e.x.bits()] += e.count;
    EXPECT_EQ(e.y, e.x[0]);
  }
  for (std::uint32_t x = 0; x < 16; ++x) {
    const double p = base[x];
    const double sigma = std::sqrt(m * p * (1 - p));
    EXPECT_LE(std::abs(freq[x] - m * p), 5 * sigma + 1e-9) << x;
  }
}

TEST(Corrupt, ZeroNoiseIsIdentity) {
  const auto d = labeled_by_first(DensePMF::uniform(3));
  for (auto mode : {NoiseMode::LabelFlip, NoiseMode::PointReplacement}) {
    const auto c = corrupt(d, {0.0, mode, std::nullopt});
    EXPECT_EQ(tv_distance(c, d), 0.0);
  }
}

TEST(Corrupt, MovesExactlyEta) {
  Philox4x32 g(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(g.below(5));
    const auto d = labeled_by_first(random_pmf(n, g, 0.2));
    const double eta = 0.3 * g.unit();
    for (auto mode : {NoiseMode::LabelFlip, NoiseMode::PointReplacement}) {
      const auto c = corrupt(d, {eta, mode, std::nullopt});
      EXPECT_NEAR(tv_distance(c, d), eta, 1e-12);
    }
  }
  // every cell at 1/4: flips can move 1/2, replacement 3/4
  const LabeledDistribution even(1, {0.25, 0.25, 0.25, 0.25});
  EXPECT_NEAR(tv_distance(corrupt(even, {0.5, NoiseMode::LabelFlip, std::nullopt}), even), 0.5,
              1e-12);
  EXPECT_THROW(corrupt(even, {0.6, NoiseMode::LabelFlip, std::nullopt}), InfeasibleNoise);
  EXPECT_THROW(corrupt(even, {0.8, NoiseMode::PointReplacement, std::nullopt}), InfeasibleNoise);
}

TEST(Corrupt, LabelFlipTakesHeaviestPointFirst) {
  const auto d = labeled_by_first(DensePMF(2, {0.1, 0.6, 0.2, 0.1}));
  const auto c = corrupt(d, {0.05, NoiseMode::LabelFlip, std::nullopt});
  EXPECT_NEAR(c.at(1, kMinus), 0.05, 1e-15);
  EXPECT_NEAR(c.at(1, kPlus), 0.55, 1e-15);
  EXPECT_EQ(c.at(2, kMinus), d.at(2, kMinus));
}

TEST(Corrupt, WorstLeafConfinedToOneLeaf) {
  const auto t = DecisionTree::split(1, {}, {});
  const std::vector<double> w{0.3, 0.7};
  const std::vector<DensePMF> ds{DensePMF::uniform_on(Restriction::parse("*-*")),
                                 DensePMF::uniform_on(Restriction::parse("*+*"))};
  const auto d = labeled_by_first(compose_tree_dist(t, w, ds));
  for (double eta : {0.05, 0.1, 0.2}) {
    const auto c = corrupt(d, {eta, NoiseMode::WorstLeaf, t});
    EXPECT_NEAR(tv_distance(c, d), eta, 1e-12);
    const auto rep = leaf_tv_decomposition(c, d, t);
    ASSERT_EQ(rep.leaves.size(), 2u);
    EXPECT_NEAR(rep.leaves[0].tv, std::min(1.0, eta / 0.3), 1e-12);
    EXPECT_EQ(rep.leaves[1].tv, 0.0);
  }
  // larger than the light leaf: spills into the next one
  const auto c = corrupt(d, {0.5, NoiseMode::WorstLeaf, t});
  EXPECT_NEAR(tv_distance(c, d), 0.5, 1e-12);
  EXPECT_THROW(corrupt(d, {0.1, NoiseMode::WorstLeaf, std::nullopt}), UsageError);
}

TEST(LeafTv, IdenticalAndOneLeafCorruption) {
  Philox4x32 g(9);
  const auto d = random_pmf(4, g);
  const auto t = DecisionTree::split(0, DecisionTree::split(1, {}, {}), {});
  const auto same = leaf_tv_decomposition(d, d, t);
  for (const auto& l : same.leaves) EXPECT_EQ(l.tv, 0.0);
  // move mass inside the leaf "+***" only
  std::vector<double> m(d.mass().begin(), d.mass().end());
  const double moved = m[1] / 2;
  m[1] -= moved;
  m[3] += moved;
  const auto rep = leaf_tv_decomposition(d, DensePMF(4, m), t);
  for (const auto& l : rep.leaves) {
    if (l.leaf.encode() == "+***") {
      EXPECT_GT(l.tv, 0.0);
    } else {
      EXPECT_EQ(l.tv, 0.0);
    }
  }
}

TEST(LeafTv, WeightedSumAtMostTwiceTv) {
  Philox4x32 g(10);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(g.below(10));
    const auto a = random_pmf(n, g, 0.3), b = random_pmf(n, g, 0.3);
    const auto t = random_tree(Restriction::all(n), 4, g);
    const auto rep = leaf_tv_decomposition(a, b, t);
    violations += rep.weighted_sum > 2 * rep.total_tv + 1e-12;
  }
  EXPECT_EQ(violations, 0);
}

TEST(Tribes, SmallCases) {
  const auto one = tribes_support_dist(1, 1);
  EXPECT_EQ(one[1], 1.0);
  EXPECT_EQ(one[0], 0.0);
  const auto d = tribes_support_dist(2, 1);
  EXPECT_EQ(d[0], 0.0);
  for (std::uint32_t x = 1; x < 4; ++x) EXPECT_NEAR(d[x], 1.0 / 3.0, 1e-15);
  EXPECT_TRUE(tribes_accepts(2, 2, 0b0101));
  EXPECT_FALSE(tribes_accepts(2, 2, 0b0011));
}

TEST(Tribes, ExplicitPartitionIsUniformDecomposition) {
  for (int w = 1; w <= 3; ++w) {
    for (int c = 1; c <= 3; ++c) {
      const auto d = tribes_support_dist(w, c);
      const auto p = tribes_partition(w, c);
      EXPECT_EQ(p.size(), static_cast<std::size_t>(std::pow(w, c)));
      EXPECT_LE(p.depth_bound, c * std::max(w - 1, 0) + c);
      const auto support = d.support();
      EXPECT_TRUE(validate_partition(p, std::span<const Point>(support)));
      EXPECT_TRUE(is_partition_decomposition(d, p, uniform_on_subcube_family())) << w << "," << c;
    }
  }
}
