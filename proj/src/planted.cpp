#include "dlift/planted.hpp"

#include <algorithm>
#include <numeric>

namespace dlift {
namespace {

std::string family_name(PieceFamily f) { return f == PieceFamily::Uniform ? "uniform" : "product"; }

PieceFamily family_from_name(const std::string& s) {
  if (s == "uniform") return PieceFamily::Uniform;
  if (s == "product") return PieceFamily::Product;
  throw UsageError("unknown piece family: " + s);
}

void check_pieces(int n, const std::vector<PieceSpec>& pieces) {
  if (pieces.empty()) throw ConstructionError("decomposition needs at least one piece");
  double total = 0.0;
  for (const auto& p : pieces) {
    if (p.region.dim() != n) throw ConstructionError("piece dimension mismatch");
    if (!(p.weight >= 0.0)) throw ConstructionError("negative piece weight");
    total += p.weight;
    if (p.family == PieceFamily::Uniform && p.support && !p.region.covers(*p.support)) {
      throw ConstructionError("uniform support leaks outside " + p.region.encode());
    }
    if (p.family == PieceFamily::Product && p.biases.size() != static_cast<std::size_t>(n)) {
      throw ConstructionError("product piece needs n biases");
    }
  }
  if (std::abs(total - 1.0) > kMassTolerance) throw ConstructionError("piece weights must sum to 1");
}

// Majority of 1 or an odd number of random literals over the free
// coordinates of rho.
Hypothesis random_target(const Restriction& rho, int max_literals, Philox4x32& rng) {
  std::vector<int> free;
  for (int i = 0; i < rho.dim(); ++i) {
    if (rho.is_free(i)) free.push_back(i);
  }
  if (free.empty()) return Hypothesis::constant(rng.below(2) ? kPlus : kMinus);
  int k = 1;
  if (max_literals >= 3 && free.size() >= 3 && rng.below(2) == 1) k = 3;
  std::vector<std::pair<int, Label>> literals;
  for (int j = 0; j < k; ++j) {
    const std::size_t pick = j + rng.below(free.size() - j);
    std::swap(free[j], free[pick]);
    literals.emplace_back(free[j], rng.below(2) ? kPlus : kMinus);
  }
  std::sort(literals.begin(), literals.end());
  return Hypothesis::majority(rho.dim(), literals);
}

std::vector<double> random_weights(std::size_t k, bool equal, Philox4x32& rng) {
  std::vector<double> w(k, 1.0);
  if (!equal) {
    for (double& v : w) v = 0.5 + rng.unit();
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  // Absorb rounding into the last weight so the sum is 1 to the ulp.
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) head += w[i];
  w.back() = 1.0 - head;
  return w;
}

std::vector<double> random_biases(const Restriction& rho, Philox4x32& rng) {
  std::vector<double> b(rho.dim());
  for (int i = 0; i < rho.dim(); ++i) {
    if (rho.is_free(i)) {
      b[i] = 0.2 + 0.6 * rng.unit();
    } else {
      b[i] = rho.value(i) == kPlus ? 1.0 : 0.0;
    }
  }
  return b;
}

DecisionTree random_complete_tree(const Restriction& root, int d, Philox4x32& rng) {
  if (d == 0) return DecisionTree::leaf();
  std::vector<int> free;
  for (int i = 0; i < root.dim(); ++i) {
    if (root.is_free(i)) free.push_back(i);
  }
  const int i = free[rng.below(free.size())];
  DecisionTree minus = random_complete_tree(root.refine(i, kMinus), d - 1, rng);
  DecisionTree plus = random_complete_tree(root.refine(i, kPlus), d - 1, rng);
  return DecisionTree::split(i, std::move(minus), std::move(plus));
}

}  // namespace

PlantedDecomposition PlantedDecomposition::from_tree(int n, DecisionTree tree,
                                                     std::vector<PieceSpec> leaves) {
  if (!tree.well_formed(Restriction::all(n))) throw ConstructionError("malformed tree");
  const auto regions = tree.leaves(n);
  if (regions.size() != leaves.size()) throw ConstructionError("one piece per leaf required");
  for (std::size_t k = 0; k < regions.size(); ++k) {
    if (!(leaves[k].region == regions[k])) {
      throw ConstructionError("piece " + std::to_string(k) + " does not match leaf " +
                              regions[k].encode());
    }
  }
  check_pieces(n, leaves);
  PlantedDecomposition out;
  out.n_ = n;
  out.depth_bound_ = tree.depth();
  out.tree_ = std::move(tree);
  out.pieces_ = std::move(leaves);
  return out;
}

PlantedDecomposition PlantedDecomposition::from_partition(int n, int depth_bound,
                                                          std::vector<PieceSpec> pieces) {
  check_pieces(n, pieces);
  SubcubePartition p{{}, depth_bound};
  for (const auto& piece : pieces) p.pieces.push_back(piece.region);
  if (!validate_partition(p)) throw ConstructionError("pieces overlap or exceed depth bound");
  PlantedDecomposition out;
  out.n_ = n;
  out.depth_bound_ = depth_bound;
  out.pieces_ = std::move(pieces);
  return out;
}

DensePMF PlantedDecomposition::piece_distribution(std::size_t k) const {
  const PieceSpec& p = pieces_.at(k);
  if (p.family == PieceFamily::Uniform) return DensePMF::uniform_on(p.support.value_or(p.region));
  std::vector<double> b = p.biases;
  for (int i = 0; i < n_; ++i) {
    if (!p.region.is_free(i)) b[i] = p.region.value(i) == kPlus ? 1.0 : 0.0;
  }
  return DensePMF::product(n_, b);
}

DensePMF PlantedDecomposition::distribution() const {
  std::vector<double> weights;
  std::vector<DensePMF> dists;
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    weights.push_back(pieces_[k].weight);
    dists.push_back(piece_distribution(k));
  }
  if (tree_) return compose_tree_dist(*tree_, weights, dists);
  return compose_partition_dist(partition(), weights, dists);
}

Label PlantedDecomposition::target(std::uint32_t bits) const {
  for (const auto& p : pieces_) {
    if (p.region.contains_bits(bits)) return p.target.eval_bits(bits);
  }
  return kPlus;
}

LabeledDistribution PlantedDecomposition::labeled() const {
  return LabeledDistribution::from_labeler(distribution(),
                                           [this](const Point& x) { return target(x.bits()); });
}

SubcubePartition PlantedDecomposition::partition() const {
  SubcubePartition p{{}, depth_bound_};
  for (const auto& piece : pieces_) p.pieces.push_back(piece.region);
  return p;
}

HypothesisMap PlantedDecomposition::target_map() const {
  HypothesisMap h(n_);
  for (const auto& p : pieces_) h.insert(p.region, p.target);
  return h;
}

nlohmann::json PlantedDecomposition::to_json() const {
  nlohmann::json pieces = nlohmann::json::array();
  for (const auto& p : pieces_) {
    nlohmann::json j{{"region", p.region.encode()},
                     {"weight", p.weight},
                     {"family", family_name(p.family)},
                     {"target", p.target.to_json()}};
    if (p.support) j["support"] = p.support->encode();
    if (p.family == PieceFamily::Product) j["biases"] = p.biases;
    pieces.push_back(std::move(j));
  }
  nlohmann::json out{{"n", n_}, {"depth_bound", depth_bound_}, {"pieces", pieces}};
  if (tree_) {
    out["kind"] = "tree";
    out["tree"] = tree_->to_json();
  } else {
    out["kind"] = "partition";
  }
  return out;
}

PlantedDecomposition PlantedDecomposition::from_json(const nlohmann::json& j) {
  const int n = j.at("n").get<int>();
  std::vector<PieceSpec> pieces;
  for (const auto& pj : j.at("pieces")) {
    PieceSpec p;
    p.region = Restriction::parse(pj.at("region").get<std::string>());
    p.weight = pj.at("weight").get<double>();
    p.family = family_from_name(pj.value("family", std::string("uniform")));
    if (pj.contains("support")) p.support = Restriction::parse(pj.at("support").get<std::string>());
    if (pj.contains("biases")) p.biases = pj.at("biases").get<std::vector<double>>();
    p.target = Hypothesis::from_json(pj.at("target"));
    pieces.push_back(std::move(p));
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "tree") return from_tree(n, DecisionTree::from_json(j.at("tree")), std::move(pieces));
  if (kind == "partition") return from_partition(n, j.at("depth_bound").get<int>(), std::move(pieces));
  throw UsageError("unknown decomposition kind: " + kind);
}

PlantedDecomposition plant_random_tree(int n, int d, std::uint64_t seed, const PlantOptions& opts) {
  if (d < 0 || d > n) throw UsageError("tree depth must lie in [0, n]");
  Philox4x32 rng(derive_seed(seed, "plant-tree"));
  DecisionTree tree = random_complete_tree(Restriction::all(n), d, rng);
  const auto regions = tree.leaves(n);
  const auto weights = random_weights(regions.size(), opts.equal_weights, rng);
  std::vector<PieceSpec> pieces;
  for (std::size_t k = 0; k < regions.size(); ++k) {
    PieceSpec p;
    p.region = regions[k];
    p.weight = weights[k];
    p.family = opts.family;
    if (opts.family == PieceFamily::Product) p.biases = random_biases(regions[k], rng);
    p.target = random_target(regions[k], opts.max_literals, rng);
    pieces.push_back(std::move(p));
  }
  return PlantedDecomposition::from_tree(n, std::move(tree), std::move(pieces));
}

PlantedDecomposition plant_random_partition(int n, int s, int d, std::uint64_t seed,
                                            const PlantOptions& opts) {
  if (s < 1 || d < 0 || d > n) throw UsageError("partition needs s >= 1 and 0 <= d <= n");
  if (d == 0 && s != 1) throw UsageError("a depth-0 partition has exactly one piece");
  Philox4x32 rng(derive_seed(seed, "plant-partition"));
  std::vector<Restriction> regions;
  constexpr int kAttempts = 100000;
  // Early large pieces can leave no room for the rest; start over when stuck.
  constexpr int kStall = 500;
  int since_progress = 0;
  for (int attempt = 0; attempt < kAttempts && static_cast<int>(regions.size()) < s; ++attempt) {
    if (++since_progress > kStall) {
      regions.clear();
      since_progress = 0;
    }
    if (d == 0) {
      regions.push_back(Restriction::all(n));
      break;
    }
    const int depth = 1 + static_cast<int>(rng.below(d));
    std::uint32_t fixed = 0, values = 0;
    for (int j = 0; j < depth; ++j) {
      int i;
      do {
        i = static_cast<int>(rng.below(n));
      } while ((fixed >> i) & 1u);
      fixed |= 1u << i;
      if (rng.below(2)) values |= 1u << i;
    }
    const Restriction rho(n, fixed, values);
    const bool clash = std::any_of(regions.begin(), regions.end(),
                                   [&](const Restriction& r) { return !r.disjoint_from(rho); });
    if (!clash) {
      regions.push_back(rho);
      since_progress = 0;
    }
  }
  if (static_cast<int>(regions.size()) < s) {
    throw ConstructionError("could not place " + std::to_string(s) +
                            " disjoint pieces of depth <= " + std::to_string(d));
  }
  std::sort(regions.begin(), regions.end(), canonical_less);
  const auto weights = random_weights(regions.size(), opts.equal_weights, rng);
  std::vector<PieceSpec> pieces;
  for (std::size_t k = 0; k < regions.size(); ++k) {
    PieceSpec p;
    p.region = regions[k];
    p.weight = weights[k];
    p.family = opts.family;
    if (opts.family == PieceFamily::Product) p.biases = random_biases(regions[k], rng);
    p.target = random_target(regions[k], opts.max_literals, rng);
    pieces.push_back(std::move(p));
  }
  return PlantedDecomposition::from_partition(n, d, std::move(pieces));
}

PlantedDecomposition plant_tribes(int width, int count, std::uint64_t seed) {
  const SubcubePartition part = tribes_partition(width, count);
  const DensePMF d = tribes_support_dist(width, count);
  const int n = width * count;
  Philox4x32 rng(derive_seed(seed, "plant-tribes"));
  std::vector<PieceSpec> pieces;
  for (const Restriction& region : part.pieces) {
    // The support pins the last coordinate of any block left free by the region.
    std::uint32_t fixed = region.fixed(), values = region.values();
    for (int t = 0; t < count; ++t) {
      const int last = (t + 1) * width - 1;
      if (region.is_free(last)) {
        bool all_minus_before = true;
        for (int j = t * width; j < last; ++j) {
          if (region.is_free(j) || region.value(j) != kMinus) all_minus_before = false;
        }
        if (all_minus_before) {
          fixed |= 1u << last;
          values |= 1u << last;
        }
      }
    }
    PieceSpec p;
    p.region = region;
    p.weight = mass_of(d, region);
    p.support = Restriction(n, fixed, values);
    p.target = random_target(*p.support, 1, rng);
    pieces.push_back(std::move(p));
  }
  // Re-normalize so weights sum to 1 to the ulp.
  double head = 0.0;
  for (std::size_t k = 0; k + 1 < pieces.size(); ++k) head += pieces[k].weight;
  pieces.back().weight = 1.0 - head;
  return PlantedDecomposition::from_partition(n, part.depth_bound, std::move(pieces));
}

PlantedDecomposition plant_xor_split(int n, int split, int lit, double minus_weight) {
  if (split == lit || split < 0 || lit < 0 || split >= n || lit >= n) {
    throw UsageError("split and literal must be distinct coordinates");
  }
  DecisionTree tree = DecisionTree::split(split, DecisionTree::leaf(), DecisionTree::leaf());
  const auto regions = tree.leaves(n);
  std::vector<PieceSpec> pieces(2);
  pieces[0].region = regions[0];
  pieces[0].weight = minus_weight;
  pieces[0].target = Hypothesis::majority(n, {{lit, kPlus}});
  pieces[1].region = regions[1];
  pieces[1].weight = 1.0 - minus_weight;
  pieces[1].target = Hypothesis::majority(n, {{lit, kMinus}});
  return PlantedDecomposition::from_tree(n, std::move(tree), std::move(pieces));
}

}  // namespace dlift
