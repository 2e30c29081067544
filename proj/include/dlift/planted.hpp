#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dlift/distributions.hpp"
#include "dlift/hypothesis.hpp"

namespace dlift {

enum class PieceFamily { Uniform, Product };

// One planted piece: a region of the decomposition, its mixture weight, the
// conditional distribution inside it and the target concept there.
struct PieceSpec {
  Restriction region;
  double weight = 0.0;
  PieceFamily family = PieceFamily::Uniform;
  // Uniform pieces: the subcube carrying the mass (defaults to `region`).
  std::optional<Restriction> support;
  // Product pieces: Pr[x_i = +1]; coordinates fixed by the region are forced.
  std::vector<double> biases;
  Hypothesis target;
};

// Ground truth for experiments: D* built from explicit pieces, plus the
// labeling f = target of the piece containing x.
class PlantedDecomposition {
 public:
  static PlantedDecomposition from_tree(int n, DecisionTree tree, std::vector<PieceSpec> leaves);
  static PlantedDecomposition from_partition(int n, int depth_bound, std::vector<PieceSpec> pieces);

  int dim() const noexcept { return n_; }
  const std::optional<DecisionTree>& tree() const noexcept { return tree_; }
  const std::vector<PieceSpec>& pieces() const noexcept { return pieces_; }
  int depth_bound() const noexcept { return depth_bound_; }

  DensePMF piece_distribution(std::size_t k) const;
  DensePMF distribution() const;
  // Label of f at x; points outside every piece get +1.
  Label target(std::uint32_t bits) const;
  LabeledDistribution labeled() const;
  SubcubePartition partition() const;
  // region -> target, usable as a planted hypothesis map.
  HypothesisMap target_map() const;

  nlohmann::json to_json() const;
  static PlantedDecomposition from_json(const nlohmann::json& j);

 private:
  int n_ = 0;
  int depth_bound_ = 0;
  std::optional<DecisionTree> tree_;
  std::vector<PieceSpec> pieces_;
};

struct PlantOptions {
  PieceFamily family = PieceFamily::Uniform;
  // Targets are majorities of 1 or up to this many literals.
  int max_literals = 3;
  bool equal_weights = false;
};

// Random complete depth-d tree; weights proportional to 0.5 + U[0,1).
PlantedDecomposition plant_random_tree(int n, int d, std::uint64_t seed,
                                       const PlantOptions& opts = {});
// s random disjoint restrictions of depth 1..d (exactly one all-* piece when d = 0).
// The distribution lives on their union.
PlantedDecomposition plant_random_partition(int n, int s, int d, std::uint64_t seed,
                                            const PlantOptions& opts = {});
// Uniform distribution over Tribes accepting inputs with its explicit partition
// and one random literal as the target on each piece.
PlantedDecomposition plant_tribes(int width, int count, std::uint64_t seed);

// The depth-1 instance: split on x_split, target x_lit on the minus leaf and
// -x_lit on the plus leaf.
PlantedDecomposition plant_xor_split(int n, int split, int lit, double minus_weight = 0.5);

}  // namespace dlift
