#include "dlift/hypothesis.hpp"

#include <algorithm>
#include <variant>

namespace dlift {

struct Hypothesis::Impl {
  struct Constant {
    Label y;
  };
  struct Polynomial {
    int n;
    std::vector<Monomial> terms;
  };
  struct Lookup {
    int n;
    std::unordered_map<std::uint32_t, Label> table;
    Label fallback;
  };
  struct Tree {
    int n;
    DecisionTree tree;
    std::vector<Restriction> leaves;
    std::vector<Hypothesis> leaf_hypotheses;
    std::unordered_map<std::uint64_t, std::size_t> index;
  };
  std::variant<Constant, Polynomial, Lookup, Tree> v;
};

namespace {

void check_label(Label y) {
  if (y != kPlus && y != kMinus) throw UsageError("labels must be +1 or -1");
}

}  // namespace

Hypothesis::Hypothesis() : Hypothesis(constant(kPlus)) {}

Hypothesis Hypothesis::constant(Label y) {
  check_label(y);
  return Hypothesis(std::make_shared<const Impl>(Impl{Impl::Constant{y}}));
}

Hypothesis Hypothesis::polynomial(int n, std::vector<Monomial> terms) {
  const std::uint32_t full = n >= 32 ? ~0u : ((1u << n) - 1u);
  for (const auto& t : terms) {
    if ((t.mask & ~full) != 0) throw UsageError("monomial outside dimension");
  }
  return Hypothesis(std::make_shared<const Impl>(Impl{Impl::Polynomial{n, std::move(terms)}}));
}

Hypothesis Hypothesis::lookup(int n, std::vector<std::pair<std::uint32_t, Label>> table,
                              Label fallback) {
  check_label(fallback);
  Impl::Lookup lk{n, {}, fallback};
  for (const auto& [bits, y] : table) {
    check_label(y);
    lk.table[bits] = y;
  }
  return Hypothesis(std::make_shared<const Impl>(Impl{std::move(lk)}));
}

Hypothesis Hypothesis::tree(int n, DecisionTree tree, const HypothesisMap& leaves) {
  Impl::Tree t{n, tree, tree.leaves(n), {}, {}};
  for (std::size_t i = 0; i < t.leaves.size(); ++i) {
    t.leaf_hypotheses.push_back(leaves.at(t.leaves[i]));
    t.index.emplace(t.leaves[i].key(), i);
  }
  return Hypothesis(std::make_shared<const Impl>(Impl{std::move(t)}));
}

Hypothesis Hypothesis::majority(int n, const std::vector<std::pair<int, Label>>& literals) {
  std::vector<Monomial> terms;
  for (const auto& [i, sign] : literals) {
    if (i < 0 || i >= n) throw UsageError("literal index out of range");
    check_label(sign);
    terms.push_back({1u << i, sign});
  }
  return polynomial(n, std::move(terms));
}

Hypothesis Hypothesis::parity(int n, std::uint32_t mask) {
  return polynomial(n, {{mask, 1}});
}

Hypothesis::Kind Hypothesis::kind() const noexcept {
  return static_cast<Kind>(impl_->v.index());
}

Label Hypothesis::eval_bits(std::uint32_t bits) const {
  struct Visitor {
    std::uint32_t bits;
    Label operator()(const Impl::Constant& c) const { return c.y; }
    Label operator()(const Impl::Polynomial& p) const {
      std::int64_t acc = 0;
      for (const auto& t : p.terms) {
        // chi_T(x) = prod_{i in T} x_i = (-1)^{#(-1) coordinates in T}
        const int minus = std::popcount(t.mask & ~bits);
        acc += (minus & 1) ? -t.weight : t.weight;
      }
      return acc >= 0 ? kPlus : kMinus;
    }
    Label operator()(const Impl::Lookup& l) const {
      const auto it = l.table.find(bits);
      return it == l.table.end() ? l.fallback : it->second;
    }
    Label operator()(const Impl::Tree& t) const {
      const Restriction leaf = t.tree.leaf_of(Restriction::all(t.n), bits);
      return t.leaf_hypotheses[t.index.at(leaf.key())].eval_bits(bits);
    }
  };
  return std::visit(Visitor{bits}, impl_->v);
}

nlohmann::json Hypothesis::to_json() const {
  using nlohmann::json;
  struct Visitor {
    json operator()(const Impl::Constant& c) const {
      return json{{"kind", "constant"}, {"label", c.y}};
    }
    json operator()(const Impl::Polynomial& p) const {
      json terms = json::array();
      for (const auto& t : p.terms) terms.push_back(json::array({t.mask, t.weight}));
      return json{{"kind", "polynomial"}, {"n", p.n}, {"terms", terms}};
    }
    json operator()(const Impl::Lookup& l) const {
      std::vector<std::pair<std::uint32_t, Label>> rows(l.table.begin(), l.table.end());
      std::sort(rows.begin(), rows.end());
      json table = json::array();
      for (const auto& [bits, y] : rows) {
        table.push_back(json::array({Point(l.n, bits).encode(), y}));
      }
      return json{{"kind", "lookup"}, {"n", l.n}, {"default", l.fallback}, {"table", table}};
    }
    json operator()(const Impl::Tree& t) const {
      json leaves = json::array();
      for (std::size_t i = 0; i < t.leaves.size(); ++i) {
        leaves.push_back(json{{"restriction", t.leaves[i].encode()},
                              {"hypothesis", t.leaf_hypotheses[i].to_json()}});
      }
      return json{{"kind", "tree"}, {"n", t.n}, {"tree", t.tree.to_json()}, {"leaves", leaves}};
    }
  };
  return std::visit(Visitor{}, impl_->v);
}

Hypothesis Hypothesis::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") return constant(j.at("label").get<Label>());
  if (kind == "polynomial") {
    std::vector<Monomial> terms;
    for (const auto& t : j.at("terms")) {
      terms.push_back({t.at(0).get<std::uint32_t>(), t.at(1).get<std::int64_t>()});
    }
    return polynomial(j.at("n").get<int>(), std::move(terms));
  }
  if (kind == "lookup") {
    std::vector<std::pair<std::uint32_t, Label>> rows;
    for (const auto& r : j.at("table")) {
      rows.emplace_back(Point::parse(r.at(0).get<std::string>()).bits(), r.at(1).get<Label>());
    }
    return lookup(j.at("n").get<int>(), std::move(rows), j.at("default").get<Label>());
  }
  if (kind == "tree") {
    const int n = j.at("n").get<int>();
    HypothesisMap leaves(n);
    for (const auto& l : j.at("leaves")) {
      leaves.insert(Restriction::parse(l.at("restriction").get<std::string>()),
                    from_json(l.at("hypothesis")));
    }
    return tree(n, DecisionTree::from_json(j.at("tree")), leaves);
  }
  throw UsageError("unknown hypothesis kind: " + kind);
}

void HypothesisMap::insert(const Restriction& rho, Hypothesis h) {
  if (rho.dim() != n_) throw UsageError("restriction dimension does not match map");
  map_.insert_or_assign(rho.key(), std::make_pair(rho, std::move(h)));
}

const Hypothesis* HypothesisMap::find(const Restriction& rho) const {
  const auto it = map_.find(rho.key());
  return it == map_.end() ? nullptr : &it->second.second;
}

const Hypothesis& HypothesisMap::at(const Restriction& rho) const {
  const Hypothesis* h = find(rho);
  if (h == nullptr) {
    throw InvariantViolation("hypothesis map has no entry for " + rho.encode());
  }
  return *h;
}

std::vector<std::pair<Restriction, Hypothesis>> HypothesisMap::entries() const {
  std::vector<std::pair<Restriction, Hypothesis>> out;
  out.reserve(map_.size());
  for (const auto& [key, entry] : map_) out.push_back(entry);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return canonical_less(a.first, b.first); });
  return out;
}

nlohmann::json HypothesisMap::to_json() const {
  nlohmann::json entries_json = nlohmann::json::array();
  for (const auto& [rho, h] : entries()) {
    entries_json.push_back({{"restriction", rho.encode()}, {"hypothesis", h.to_json()}});
  }
  return {{"n", n_}, {"entries", entries_json}};
}

HypothesisMap HypothesisMap::from_json(const nlohmann::json& j) {
  HypothesisMap out(j.at("n").get<int>());
  for (const auto& e : j.at("entries")) {
    out.insert(Restriction::parse(e.at("restriction").get<std::string>()),
               Hypothesis::from_json(e.at("hypothesis")));
  }
  return out;
}

Label eval_tree_hypothesis(const DecisionTree& t, const HypothesisMap& h, const Point& x) {
  if (x.dim() != h.dim()) throw UsageError("dimension mismatch in eval_tree_hypothesis");
  const Restriction leaf = t.leaf_of(Restriction::all(x.dim()), x.bits());
  return h.at(leaf)(x);
}

std::optional<Label> eval_list_hypothesis(const SubcubeList& l, const HypothesisMap& h,
                                          const Point& x) {
  for (const Restriction& rho : l.entries) {
    if (rho.contains(x)) return h.at(rho)(x);
  }
  return std::nullopt;
}

}  // namespace dlift
