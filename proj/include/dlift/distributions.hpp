#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlift/core.hpp"
#include "dlift/decomposition.hpp"
#include "dlift/hypothesis.hpp"
#include "dlift/rng.hpp"
#include "json.hpp"

namespace dlift {

inline constexpr double kMassTolerance = 1e-12;

// Exact probability mass function over {+1,-1}^n, indexed by Point::bits().
class DensePMF {
 public:
  DensePMF() = default;
  // Throws UsageError unless masses are nonnegative and sum to 1 within
  // kMassTolerance.
  DensePMF(int n, std::vector<double> mass);

  static DensePMF uniform(int n);
  static DensePMF uniform_on(const Restriction& rho);
  static DensePMF point_mass(const Point& x);
  // biases[i] = Pr[x_i = +1].
  static DensePMF product(int n, std::span<const double> biases);

  int dim() const noexcept { return n_; }
  std::span<const double> mass() const noexcept { return mass_; }
  double operator[](std::uint32_t bits) const { return mass_[bits]; }
  std::vector<Point> support() const;

  nlohmann::json to_json() const;
  static DensePMF from_json(const nlohmann::json& j);

 private:
  int n_ = 0;
  std::vector<double> mass_;
};

// Joint mass over (point, label); cell 2*bits + (label == +1).
class LabeledDistribution {
 public:
  LabeledDistribution() = default;
  LabeledDistribution(int n, std::vector<double> joint);

  static LabeledDistribution from_labeler(const DensePMF& d,
                                          const std::function<Label(const Point&)>& f);

  int dim() const noexcept { return n_; }
  std::span<const double> joint() const noexcept { return joint_; }
  double at(std::uint32_t bits, Label y) const { return joint_[cell(bits, y)]; }
  DensePMF marginal() const;

  static std::size_t cell(std::uint32_t bits, Label y) {
    return 2 * static_cast<std::size_t>(bits) + (y == kPlus ? 1 : 0);
  }

 private:
  int n_ = 0;
  std::vector<double> joint_;
};

double tv_distance(const DensePMF& a, const DensePMF& b);
double tv_distance(const LabeledDistribution& a, const LabeledDistribution& b);

double mass_of(const DensePMF& d, const Restriction& rho);
// Throws ConditioningOnNull when rho has zero mass.
DensePMF restrict_dist(const DensePMF& d, const Restriction& rho);

// Exact Pr_{(x,y)~D}[h(x) != y]; a nullopt prediction counts as an error.
template <class F>
  requires TotalPredictor<F> || PartialPredictor<F>
double true_error(const F& predict, const LabeledDistribution& d) {
  double err = 0.0;
  const std::uint32_t points = 1u << d.dim();
  for (std::uint32_t bits = 0; bits < points; ++bits) {
    const double plus = d.at(bits, kPlus);
    const double minus = d.at(bits, kMinus);
    if (plus == 0.0 && minus == 0.0) continue;
    const Point x(d.dim(), bits);
    if constexpr (PartialPredictor<F>) {
      const std::optional<Label> p = predict(x);
      if (!p) {
        err += plus + minus;
        continue;
      }
      err += *p == kPlus ? minus : plus;
    } else {
      err += static_cast<Label>(predict(x)) == kPlus ? minus : plus;
    }
  }
  return err;
}

// A family of distributions with a membership test and a constructive
// restriction map: restrict_witness(D, rho) is the member that D_rho must equal.
struct BaseFamily {
  std::string name;
  std::function<bool(const DensePMF&)> contains;
  std::function<DensePMF(const DensePMF&, const Restriction&)> restrict_witness;
};

// Uniform distributions over a subcube (the uniform distribution and all of
// its restrictions).
BaseFamily uniform_on_subcube_family();
// Product distributions; coordinates may be deterministic.
BaseFamily product_on_subcube_family();
BaseFamily family_by_name(const std::string& name);

// Checks D_rho against the family for every positive-mass restriction of D.
// Returns the first failing restriction, if any.
std::optional<Restriction> find_restriction_closure_failure(const BaseFamily& family,
                                                            const DensePMF& d);

// Mixture sum_l w_l D_l over the leaves of `tree` (leaf order of
// DecisionTree::leaves). Throws ConstructionError on support leakage.
DensePMF compose_tree_dist(const DecisionTree& tree, std::span<const double> leaf_weights,
                           std::span<const DensePMF> leaf_dists);
// Same over partition pieces; additionally checks disjointness and coverage.
DensePMF compose_partition_dist(const SubcubePartition& p, std::span<const double> weights,
                                std::span<const DensePMF> piece_dists);

bool is_tree_decomposition(const DensePMF& d, const DecisionTree& tree,
                           const BaseFamily& family);
bool is_partition_decomposition(const DensePMF& d, const SubcubePartition& p,
                                const BaseFamily& family);

// Walker/Vose alias table over a finite mass vector.
class AliasSampler {
 public:
  explicit AliasSampler(std::span<const double> weights);
  std::size_t draw(Philox4x32& rng) const;
  std::size_t size() const noexcept { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

// m i.i.d. draws in draw order.
LabeledSample sample(const LabeledDistribution& d, std::uint64_t m, std::uint64_t seed);
// The same draws as sample(d, m, seed), returned compacted.
LabeledSample sample_counts(const LabeledDistribution& d, std::uint64_t m, std::uint64_t seed);

enum class NoiseMode { LabelFlip, PointReplacement, WorstLeaf };

std::string to_string(NoiseMode mode);
NoiseMode noise_mode_from_string(const std::string& s);

struct NoiseModel {
  double eta = 0.0;
  NoiseMode mode = NoiseMode::LabelFlip;
  // Leaves considered by WorstLeaf.
  std::optional<DecisionTree> tree;
};

// Moves exactly noise.eta mass, so tv_distance(d, result) == eta.
//   LabelFlip         flips labels on the heaviest points first
//   PointReplacement  moves mass from the heaviest cells onto one wrong-label
//                     cell at the lightest point
//   WorstLeaf         flips labels inside the lightest tree leaf that can absorb
//                     all of eta, spilling over lighter-first if none can
// Throws InfeasibleNoise when the mode cannot move eta.
LabeledDistribution corrupt(const LabeledDistribution& d, const NoiseModel& noise);

template <class Scalar>
struct LeafTv {
  Restriction leaf;
  Scalar reach;  // Pr_{D'}[x reaches leaf]
  Scalar tv;     // TV(D_leaf, D'_leaf)
};

template <class Scalar>
struct LeafTvReport {
  std::vector<LeafTv<Scalar>> leaves;
  Scalar weighted_sum{};
  Scalar total_tv{};
};

// Per-leaf TV of the conditionals. Mass vectors have `stride` cells per point
// (1 for point distributions, 2 for labeled ones). A leaf with zero mass under
// both sides has TV 0; zero under exactly one side has TV 1.
template <class Scalar>
LeafTvReport<Scalar> leaf_tv_decomposition(int n, std::span<const Scalar> d,
                                           std::span<const Scalar> d2,
                                           const DecisionTree& tree, int stride = 1) {
  using std::abs;
  const std::size_t cells = (std::size_t{1} << n) * stride;
  if (d.size() != cells || d2.size() != cells) {
    throw UsageError("leaf_tv_decomposition: mass vectors do not match dimension");
  }
  LeafTvReport<Scalar> report;
  for (std::size_t c = 0; c < cells; ++c) report.total_tv += abs(d[c] - d2[c]);
  report.total_tv /= 2;
  for (const Restriction& leaf : tree.leaves(n)) {
    Scalar a{}, b{};
    for (std::size_t c = 0; c < cells; ++c) {
      if (!leaf.contains_bits(static_cast<std::uint32_t>(c / stride))) continue;
      a += d[c];
      b += d2[c];
    }
    Scalar tv{};
    if (a == Scalar{} && b == Scalar{}) {
      tv = Scalar{};
    } else if (a == Scalar{} || b == Scalar{}) {
      tv = Scalar{1};
    } else {
      for (std::size_t c = 0; c < cells; ++c) {
        if (!leaf.contains_bits(static_cast<std::uint32_t>(c / stride))) continue;
        tv += abs(d[c] / a - d2[c] / b);
      }
      tv /= 2;
    }
    report.weighted_sum += b * tv;
    report.leaves.push_back({leaf, b, tv});
  }
  return report;
}

LeafTvReport<double> leaf_tv_decomposition(const DensePMF& d, const DensePMF& d2,
                                           const DecisionTree& tree);
LeafTvReport<double> leaf_tv_decomposition(const LabeledDistribution& d,
                                           const LabeledDistribution& d2,
                                           const DecisionTree& tree);

// Accepting inputs of Tribes in the +1/-1 encoding used here: `count` blocks of
// `width` consecutive coordinates, accepted iff every block holds a +1.
bool tribes_accepts(int width, int count, std::uint32_t bits);
DensePMF tribes_support_dist(int width, int count);
// Explicit partition of the accepting set: in each block, the first +1
// position. width^count pieces of depth <= count*(width-1); each piece meets
// the support in a subcube, so the conditionals are uniform on subcubes.
SubcubePartition tribes_partition(int width, int count);

}  // namespace dlift
