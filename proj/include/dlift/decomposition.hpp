#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dlift/core.hpp"
#include "json.hpp"

namespace dlift {

// A decision tree over {+1,-1}^n. A Split queries one coordinate; its `minus`
// child handles x_i = -1 and its `plus` child x_i = +1. Immutable, cheap to copy.
class DecisionTree {
 public:
  DecisionTree();  // a single leaf

  static DecisionTree leaf() { return DecisionTree(); }
  static DecisionTree split(int index, DecisionTree minus, DecisionTree plus);

  bool is_leaf() const noexcept { return node_ == nullptr; }
  int split_index() const;
  const DecisionTree& minus() const;
  const DecisionTree& plus() const;

  int depth() const noexcept;
  std::size_t leaf_count() const noexcept;
  // No coordinate repeats on a root-to-leaf path and all indices lie below
  // root.dim() and are free in root.
  bool well_formed(const Restriction& root) const;
  // Every leaf sits at the same depth.
  bool complete() const noexcept;

  // Leaf restrictions in depth-first order, minus branch first.
  std::vector<Restriction> leaves(const Restriction& root) const;
  std::vector<Restriction> leaves(int n) const { return leaves(Restriction::all(n)); }
  Restriction leaf_of(const Restriction& root, std::uint32_t bits) const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);

  friend bool operator==(const DecisionTree& a, const DecisionTree& b);

 private:
  struct Node;
  explicit DecisionTree(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

// Disjoint collection of restrictions of depth at most `depth_bound`.
struct SubcubePartition {
  std::vector<Restriction> pieces;
  int depth_bound = 0;

  std::size_t size() const noexcept { return pieces.size(); }
};

// Ordered, possibly overlapping restrictions; first match wins.
struct SubcubeList {
  std::vector<Restriction> entries;

  std::size_t size() const noexcept { return entries.size(); }
};

// Pairwise disjoint, depth-bounded and (if `support` is given) covering.
bool validate_partition(const SubcubePartition& p,
                        std::optional<std::span<const Point>> support = std::nullopt);

// All restrictions of depth <= d, in canonical order.
std::vector<Restriction> enumerate_restrictions(int n, int d);
// sum_{k<=d} C(n,k) 2^k
std::uint64_t count_restrictions(int n, int d);

// Every complete depth-d tree whose splits use free coordinates of `root`.
// Count grows like n^(2^d); meant for oracles on tiny instances.
std::vector<DecisionTree> enumerate_trees(const Restriction& root, int d);

}  // namespace dlift
