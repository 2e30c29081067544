#include "dlift/decomposition.hpp"

#include <algorithm>
#include <functional>

namespace dlift {

struct DecisionTree::Node {
  int index;
  DecisionTree minus;
  DecisionTree plus;
};

DecisionTree::DecisionTree() = default;

DecisionTree DecisionTree::split(int index, DecisionTree minus, DecisionTree plus) {
  if (index < 0 || index >= kMaxDim) throw UsageError("split index out of range");
  return DecisionTree(std::make_shared<const Node>(Node{index, std::move(minus), std::move(plus)}));
}

int DecisionTree::split_index() const {
  if (is_leaf()) throw UsageError("leaf has no split index");
  return node_->index;
}

const DecisionTree& DecisionTree::minus() const {
  if (is_leaf()) throw UsageError("leaf has no children");
  return node_->minus;
}

const DecisionTree& DecisionTree::plus() const {
  if (is_leaf()) throw UsageError("leaf has no children");
  return node_->plus;
}

int DecisionTree::depth() const noexcept {
  if (is_leaf()) return 0;
  return 1 + std::max(node_->minus.depth(), node_->plus.depth());
}

std::size_t DecisionTree::leaf_count() const noexcept {
  if (is_leaf()) return 1;
  return node_->minus.leaf_count() + node_->plus.leaf_count();
}

bool DecisionTree::well_formed(const Restriction& root) const {
  if (is_leaf()) return true;
  const int i = node_->index;
  if (i >= root.dim() || !root.is_free(i)) return false;
  return node_->minus.well_formed(root.refine(i, kMinus)) &&
         node_->plus.well_formed(root.refine(i, kPlus));
}

bool DecisionTree::complete() const noexcept {
  if (is_leaf()) return true;
  return node_->minus.complete() && node_->plus.complete() &&
         node_->minus.depth() == node_->plus.depth();
}

std::vector<Restriction> DecisionTree::leaves(const Restriction& root) const {
  std::vector<Restriction> out;
  std::function<void(const DecisionTree&, const Restriction&)> walk =
      [&](const DecisionTree& t, const Restriction& rho) {
        if (t.is_leaf()) {
          out.push_back(rho);
          return;
        }
        walk(t.minus(), rho.refine(t.split_index(), kMinus));
        walk(t.plus(), rho.refine(t.split_index(), kPlus));
      };
  walk(*this, root);
  return out;
}

Restriction DecisionTree::leaf_of(const Restriction& root, std::uint32_t bits) const {
  const DecisionTree* t = this;
  Restriction rho = root;
  while (!t->is_leaf()) {
    const int i = t->node_->index;
    const Label b = (bits >> i) & 1u ? kPlus : kMinus;
    rho = rho.refine(i, b);
    t = b == kPlus ? &t->node_->plus : &t->node_->minus;
  }
  return rho;
}

nlohmann::json DecisionTree::to_json() const {
  if (is_leaf()) return nlohmann::json{{"leaf", true}};
  return nlohmann::json{{"split", node_->index},
                        {"minus", node_->minus.to_json()},
                        {"plus", node_->plus.to_json()}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  if (j.contains("leaf")) return DecisionTree::leaf();
  return DecisionTree::split(j.at("split").get<int>(), from_json(j.at("minus")),
                             from_json(j.at("plus")));
}

bool operator==(const DecisionTree& a, const DecisionTree& b) {
  if (a.is_leaf() || b.is_leaf()) return a.is_leaf() == b.is_leaf();
  return a.node_->index == b.node_->index && a.node_->minus == b.node_->minus &&
         a.node_->plus == b.node_->plus;
}

bool validate_partition(const SubcubePartition& p,
                        std::optional<std::span<const Point>> support) {
  for (std::size_t i = 0; i < p.pieces.size(); ++i) {
    if (p.pieces[i].depth() > p.depth_bound) return false;
    for (std::size_t j = i + 1; j < p.pieces.size(); ++j) {
      if (!p.pieces[i].disjoint_from(p.pieces[j])) return false;
    }
  }
  if (support) {
    for (const Point& x : *support) {
      const bool covered = std::any_of(p.pieces.begin(), p.pieces.end(),
                                       [&](const Restriction& r) { return r.contains(x); });
      if (!covered) return false;
    }
  }
  return true;
}

std::vector<Restriction> enumerate_restrictions(int n, int d) {
  if (n < 0 || n > kMaxDim || d < 0) throw UsageError("enumerate_restrictions: bad arguments");
  d = std::min(d, n);
  std::vector<Restriction> out;
  out.reserve(count_restrictions(n, d));
  const std::uint32_t limit = std::uint32_t{1} << n;
  // Walk fixed masks of popcount <= d via Gosper's hack per popcount.
  for (int k = 0; k <= d; ++k) {
    std::uint32_t fixed = k == 0 ? 0u : (1u << k) - 1u;
    while (fixed < limit) {
      std::uint32_t values = fixed;
      while (true) {
        out.emplace_back(n, fixed, values);
        if (values == 0) break;
        values = (values - 1) & fixed;
      }
      if (fixed == 0) break;
      const std::uint32_t c = fixed & -fixed;
      const std::uint32_t r = fixed + c;
      fixed = (((r ^ fixed) >> 2) / c) | r;
    }
  }
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

std::uint64_t count_restrictions(int n, int d) {
  std::uint64_t total = 0, binom = 1;
  for (int k = 0; k <= std::min(d, n); ++k) {
    total += binom << k;
    binom = binom * static_cast<std::uint64_t>(n - k) / static_cast<std::uint64_t>(k + 1);
  }
  return total;
}

std::vector<DecisionTree> enumerate_trees(const Restriction& root, int d) {
  if (d == 0) return {DecisionTree::leaf()};
  std::vector<DecisionTree> out;
  for (int i = 0; i < root.dim(); ++i) {
    if (!root.is_free(i)) continue;
    const auto minus = enumerate_trees(root.refine(i, kMinus), d - 1);
    const auto plus = enumerate_trees(root.refine(i, kPlus), d - 1);
    for (const auto& m : minus) {
      for (const auto& p : plus) out.push_back(DecisionTree::split(i, m, p));
    }
  }
  return out;
}

}  // namespace dlift
