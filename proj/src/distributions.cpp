#include "dlift/distributions.hpp"

#include <algorithm>
#include <numeric>

namespace dlift {
namespace {

std::size_t point_count(int n) { return std::size_t{1} << n; }

double sum_masses(std::span<const double> m) {
  long double acc = 0.0L;
  for (double v : m) acc += v;
  return static_cast<double>(acc);
}

// Calls fn(bits) for every point of rho.
template <class Fn>
void for_each_point(const Restriction& rho, Fn&& fn) {
  const std::uint32_t free = rho.free_mask();
  std::uint32_t sub = free;
  while (true) {
    fn(rho.values() | sub);
    if (sub == 0) break;
    sub = (sub - 1) & free;
  }
}

// Smallest subcube containing every support point; nullopt for an empty
// support.
std::optional<Restriction> support_hull(const DensePMF& d) {
  const std::uint32_t full = d.dim() == 32 ? ~0u : ((1u << d.dim()) - 1u);
  std::uint32_t all_and = full, all_or = 0;
  bool any = false;
  for (std::uint32_t bits = 0; bits < point_count(d.dim()); ++bits) {
    if (d[bits] <= 0.0) continue;
    any = true;
    all_and &= bits;
    all_or |= bits;
  }
  if (!any) return std::nullopt;
  const std::uint32_t fixed = ~(all_and ^ all_or) & full;
  return Restriction(d.dim(), fixed, all_and & fixed);
}

Restriction intersect(const Restriction& a, const Restriction& b) {
  if (a.disjoint_from(b)) throw ConditioningOnNull("restrictions are disjoint");
  return Restriction(a.dim(), a.fixed() | b.fixed(), a.values() | b.values());
}

void check_same_dim(int a, int b, const char* what) {
  if (a != b) throw UsageError(std::string("dimension mismatch in ") + what);
}

void check_weights(std::span<const double> w, std::size_t expected) {
  if (w.size() != expected) throw ConstructionError("weight count does not match pieces");
  for (double v : w) {
    if (!(v >= 0.0)) throw ConstructionError("negative weight");
  }
  if (std::abs(sum_masses(w) - 1.0) > kMassTolerance) {
    throw ConstructionError("weights must sum to 1");
  }
}

// Greedy label flips over `order`, taking from each point's majority-label
// cell. Returns the mass still unmoved.
double flip_labels(std::vector<double>& joint, std::span<const std::uint32_t> order,
                   double remaining) {
  for (std::uint32_t bits : order) {
    if (remaining <= 0.0) break;
    const std::size_t plus = LabeledDistribution::cell(bits, kPlus);
    const std::size_t minus = LabeledDistribution::cell(bits, kMinus);
    const std::size_t src = joint[plus] >= joint[minus] ? plus : minus;
    const std::size_t dst = src == plus ? minus : plus;
    const double take = std::min(remaining, joint[src]);
    joint[src] -= take;
    joint[dst] += take;
    remaining -= take;
  }
  return remaining;
}

std::vector<std::uint32_t> points_by_mass(const LabeledDistribution& d,
                                          const std::optional<Restriction>& within) {
  std::vector<std::uint32_t> order;
  for (std::uint32_t bits = 0; bits < point_count(d.dim()); ++bits) {
    if (!within || within->contains_bits(bits)) order.push_back(bits);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return d.at(a, kPlus) + d.at(a, kMinus) > d.at(b, kPlus) + d.at(b, kMinus);
  });
  return order;
}

constexpr double kMoveTolerance = 1e-12;

}  // namespace

DensePMF::DensePMF(int n, std::vector<double> mass) : n_(n), mass_(std::move(mass)) {
  if (n < 0 || n > kMaxDim) throw UsageError("PMF dimension out of range");
  if (mass_.size() != point_count(n)) throw UsageError("PMF size must be 2^n");
  for (double v : mass_) {
    if (!(v >= 0.0)) throw UsageError("PMF masses must be nonnegative");
  }
  if (std::abs(sum_masses(mass_) - 1.0) > kMassTolerance) {
    throw UsageError("PMF masses must sum to 1");
  }
}

DensePMF DensePMF::uniform(int n) { return uniform_on(Restriction::all(n)); }

DensePMF DensePMF::uniform_on(const Restriction& rho) {
  std::vector<double> mass(point_count(rho.dim()), 0.0);
  const double p = 1.0 / static_cast<double>(rho.volume());
  for_each_point(rho, [&](std::uint32_t bits) { mass[bits] = p; });
  return DensePMF(rho.dim(), std::move(mass));
}

DensePMF DensePMF::point_mass(const Point& x) {
  std::vector<double> mass(point_count(x.dim()), 0.0);
  mass[x.bits()] = 1.0;
  return DensePMF(x.dim(), std::move(mass));
}

DensePMF DensePMF::product(int n, std::span<const double> biases) {
  if (biases.size() != static_cast<std::size_t>(n)) throw UsageError("bias vector length != n");
  for (double p : biases) {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("bias outside [0,1]");
  }
  std::vector<double> mass(point_count(n));
  for (std::uint32_t bits = 0; bits < mass.size(); ++bits) {
    double m = 1.0;
    for (int i = 0; i < n; ++i) m *= (bits >> i) & 1u ? biases[i] : 1.0 - biases[i];
    mass[bits] = m;
  }
  return DensePMF(n, std::move(mass));
}

std::vector<Point> DensePMF::support() const {
  std::vector<Point> out;
  for (std::uint32_t bits = 0; bits < mass_.size(); ++bits) {
    if (mass_[bits] > 0.0) out.emplace_back(n_, bits);
  }
  return out;
}

nlohmann::json DensePMF::to_json() const { return {{"n", n_}, {"mass", mass_}}; }

DensePMF DensePMF::from_json(const nlohmann::json& j) {
  return DensePMF(j.at("n").get<int>(), j.at("mass").get<std::vector<double>>());
}

LabeledDistribution::LabeledDistribution(int n, std::vector<double> joint)
    : n_(n), joint_(std::move(joint)) {
  if (n < 0 || n > kMaxDim) throw UsageError("dimension out of range");
  if (joint_.size() != 2 * point_count(n)) throw UsageError("joint size must be 2^(n+1)");
  for (double v : joint_) {
    if (!(v >= 0.0)) throw UsageError("joint masses must be nonnegative");
  }
  if (std::abs(sum_masses(joint_) - 1.0) > kMassTolerance) {
    throw UsageError("joint masses must sum to 1");
  }
}

LabeledDistribution LabeledDistribution::from_labeler(
    const DensePMF& d, const std::function<Label(const Point&)>& f) {
  std::vector<double> joint(2 * point_count(d.dim()), 0.0);
  for (std::uint32_t bits = 0; bits < point_count(d.dim()); ++bits) {
    if (d[bits] == 0.0) continue;
    joint[cell(bits, f(Point(d.dim(), bits)))] = d[bits];
  }
  return LabeledDistribution(d.dim(), std::move(joint));
}

DensePMF LabeledDistribution::marginal() const {
  std::vector<double> mass(point_count(n_));
  for (std::uint32_t bits = 0; bits < mass.size(); ++bits) {
    mass[bits] = joint_[2 * bits] + joint_[2 * bits + 1];
  }
  return DensePMF(n_, std::move(mass));
}

double tv_distance(const DensePMF& a, const DensePMF& b) {
  check_same_dim(a.dim(), b.dim(), "tv_distance");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < a.mass().size(); ++i) acc += std::abs(a.mass()[i] - b.mass()[i]);
  return static_cast<double>(acc / 2);
}

double tv_distance(const LabeledDistribution& a, const LabeledDistribution& b) {
  check_same_dim(a.dim(), b.dim(), "tv_distance");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < a.joint().size(); ++i) acc += std::abs(a.joint()[i] - b.joint()[i]);
  return static_cast<double>(acc / 2);
}

double mass_of(const DensePMF& d, const Restriction& rho) {
  check_same_dim(d.dim(), rho.dim(), "mass_of");
  long double acc = 0.0L;
  for_each_point(rho, [&](std::uint32_t bits) { acc += d[bits]; });
  return static_cast<double>(acc);
}

DensePMF restrict_dist(const DensePMF& d, const Restriction& rho) {
  const double total = mass_of(d, rho);
  if (total <= 0.0) {
    throw ConditioningOnNull("restriction " + rho.encode() + " has zero mass");
  }
  std::vector<double> mass(point_count(d.dim()), 0.0);
  for_each_point(rho, [&](std::uint32_t bits) { mass[bits] = d[bits] / total; });
  return DensePMF(d.dim(), std::move(mass));
}

BaseFamily uniform_on_subcube_family() {
  BaseFamily f;
  f.name = "uniform";
  f.contains = [](const DensePMF& d) {
    const auto hull = support_hull(d);
    if (!hull) return false;
    const double p = 1.0 / static_cast<double>(hull->volume());
    for (std::uint32_t bits = 0; bits < point_count(d.dim()); ++bits) {
      const double expected = hull->contains_bits(bits) ? p : 0.0;
      if (std::abs(d[bits] - expected) > kMassTolerance) return false;
    }
    return true;
  };
  f.restrict_witness = [](const DensePMF& d, const Restriction& rho) {
    const auto hull = support_hull(d);
    if (!hull) throw ConditioningOnNull("empty support");
    return DensePMF::uniform_on(intersect(*hull, rho));
  };
  return f;
}

BaseFamily product_on_subcube_family() {
  auto marginals = [](const DensePMF& d) {
    std::vector<double> p(d.dim(), 0.0);
    for (std::uint32_t bits = 0; bits < point_count(d.dim()); ++bits) {
      for (int i = 0; i < d.dim(); ++i) {
        if ((bits >> i) & 1u) p[i] += d[bits];
      }
    }
    for (double& v : p) v = std::clamp(v, 0.0, 1.0);
    return p;
  };
  BaseFamily f;
  f.name = "product";
  f.contains = [marginals](const DensePMF& d) {
    const auto p = marginals(d);
    const DensePMF prod = DensePMF::product(d.dim(), p);
    for (std::uint32_t bits = 0; bits < point_count(d.dim()); ++bits) {
      if (std::abs(d[bits] - prod[bits]) > kMassTolerance) return false;
    }
    return true;
  };
  f.restrict_witness = [marginals](const DensePMF& d, const Restriction& rho) {
    auto p = marginals(d);
    for (int i = 0; i < d.dim(); ++i) {
      if (rho.is_free(i)) continue;
      const double want = rho.value(i) == kPlus ? 1.0 : 0.0;
      if (p[i] == 1.0 - want) throw ConditioningOnNull("restriction has zero mass");
      p[i] = want;
    }
    return DensePMF::product(d.dim(), p);
  };
  return f;
}

BaseFamily family_by_name(const std::string& name) {
  if (name == "uniform") return uniform_on_subcube_family();
  if (name == "product") return product_on_subcube_family();
  throw UsageError("unknown base family: " + name);
}

std::optional<Restriction> find_restriction_closure_failure(const BaseFamily& family,
                                                            const DensePMF& d) {
  const int n = d.dim();
  std::vector<int> digits(n, 0);  // 0 -> *, 1 -> +, 2 -> -
  while (true) {
    std::uint32_t fixed = 0, values = 0;
    for (int i = 0; i < n; ++i) {
      if (digits[i] != 0) fixed |= 1u << i;
      if (digits[i] == 1) values |= 1u << i;
    }
    const Restriction rho(n, fixed, values);
    if (mass_of(d, rho) > 0.0) {
      const DensePMF r = restrict_dist(d, rho);
      if (!family.contains(r) || tv_distance(r, family.restrict_witness(d, rho)) > kMassTolerance) {
        return rho;
      }
    }
    int i = 0;
    while (i < n && digits[i] == 2) digits[i++] = 0;
    if (i == n) break;
    ++digits[i];
  }
  return std::nullopt;
}

namespace {

DensePMF compose_mixture(int n, std::span<const Restriction> regions,
                         std::span<const double> weights, std::span<const DensePMF> dists) {
  check_weights(weights, regions.size());
  if (dists.size() != regions.size()) throw ConstructionError("distribution count mismatch");
  std::vector<double> mass(point_count(n), 0.0);
  for (std::size_t k = 0; k < regions.size(); ++k) {
    if (dists[k].dim() != n) throw ConstructionError("piece distribution dimension mismatch");
    for (std::uint32_t bits = 0; bits < mass.size(); ++bits) {
      const double m = dists[k][bits];
      if (m == 0.0) continue;
      if (!regions[k].contains_bits(bits)) {
        throw ConstructionError("piece distribution leaks outside " + regions[k].encode());
      }
      mass[bits] += weights[k] * m;
    }
  }
  return DensePMF(n, std::move(mass));
}

}  // namespace

DensePMF compose_tree_dist(const DecisionTree& tree, std::span<const double> leaf_weights,
                           std::span<const DensePMF> leaf_dists) {
  if (leaf_dists.empty()) throw ConstructionError("no leaf distributions");
  const int n = leaf_dists.front().dim();
  if (!tree.well_formed(Restriction::all(n))) throw ConstructionError("malformed tree");
  const auto leaves = tree.leaves(n);
  return compose_mixture(n, leaves, leaf_weights, leaf_dists);
}

DensePMF compose_partition_dist(const SubcubePartition& p, std::span<const double> weights,
                                std::span<const DensePMF> piece_dists) {
  if (piece_dists.empty()) throw ConstructionError("no piece distributions");
  if (!validate_partition(p)) throw ConstructionError("pieces overlap or exceed depth bound");
  return compose_mixture(piece_dists.front().dim(), p.pieces, weights, piece_dists);
}

bool is_tree_decomposition(const DensePMF& d, const DecisionTree& tree,
                           const BaseFamily& family) {
  if (!tree.well_formed(Restriction::all(d.dim()))) return false;
  for (const Restriction& leaf : tree.leaves(d.dim())) {
    if (mass_of(d, leaf) <= 0.0) continue;
    if (!family.contains(restrict_dist(d, leaf))) return false;
  }
  return true;
}

bool is_partition_decomposition(const DensePMF& d, const SubcubePartition& p,
                                const BaseFamily& family) {
  const auto support = d.support();
  if (!validate_partition(p, std::span<const Point>(support))) return false;
  for (const Restriction& piece : p.pieces) {
    if (mass_of(d, piece) <= 0.0) continue;
    if (!family.contains(restrict_dist(d, piece))) return false;
  }
  return true;
}

AliasSampler::AliasSampler(std::span<const double> weights)
    : prob_(weights.size(), 0.0), alias_(weights.size(), 0) {
  const std::size_t k = weights.size();
  if (k == 0) throw UsageError("alias table needs at least one weight");
  const double total = sum_masses(weights);
  if (!(total > 0.0)) throw UsageError("alias table needs positive total weight");
  std::vector<double> scaled(k);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < k; ++i) {
    scaled[i] = weights[i] * static_cast<double>(k) / total;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
  // Leftovers in `small` are rounding residue; treat them as full columns
  // unless they carry no weight at all.
  for (std::size_t i : small) {
    prob_[i] = weights[i] > 0.0 ? 1.0 : 0.0;
    alias_[i] = weights[i] > 0.0 ? i : alias_[i];
  }
}

std::size_t AliasSampler::draw(Philox4x32& rng) const {
  const std::size_t column = rng.below(prob_.size());
  return rng.unit() < prob_[column] ? column : alias_[column];
}

LabeledSample sample(const LabeledDistribution& d, std::uint64_t m, std::uint64_t seed) {
  const AliasSampler sampler(d.joint());
  Philox4x32 rng(seed);
  LabeledSample out(d.dim());
  for (std::uint64_t k = 0; k < m; ++k) {
    const std::size_t c = sampler.draw(rng);
    out.add(Point(d.dim(), static_cast<std::uint32_t>(c / 2)), c % 2 ? kPlus : kMinus);
  }
  return out;
}

LabeledSample sample_counts(const LabeledDistribution& d, std::uint64_t m, std::uint64_t seed) {
  const AliasSampler sampler(d.joint());
  Philox4x32 rng(seed);
  std::vector<std::uint64_t> counts(d.joint().size(), 0);
  for (std::uint64_t k = 0; k < m; ++k) ++counts[sampler.draw(rng)];
  std::vector<LabeledExample> items;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) continue;
    items.push_back({Point(d.dim(), static_cast<std::uint32_t>(c / 2)), c % 2 ? kPlus : kMinus,
                     counts[c]});
  }
  return LabeledSample(d.dim(), std::move(items));
}

std::string to_string(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::LabelFlip: return "label-flip";
    case NoiseMode::PointReplacement: return "point-replacement";
    case NoiseMode::WorstLeaf: return "worst-leaf";
  }
  return "?";
}

NoiseMode noise_mode_from_string(const std::string& s) {
  if (s == "label-flip") return NoiseMode::LabelFlip;
  if (s == "point-replacement") return NoiseMode::PointReplacement;
  if (s == "worst-leaf") return NoiseMode::WorstLeaf;
  throw UsageError("unknown noise mode: " + s);
}

LabeledDistribution corrupt(const LabeledDistribution& d, const NoiseModel& noise) {
  if (!(noise.eta >= 0.0 && noise.eta <= 1.0)) throw UsageError("eta must lie in [0,1]");
  std::vector<double> joint(d.joint().begin(), d.joint().end());
  double remaining = noise.eta;
  switch (noise.mode) {
    case NoiseMode::LabelFlip: {
      const auto order = points_by_mass(d, std::nullopt);
      remaining = flip_labels(joint, order, remaining);
      break;
    }
    case NoiseMode::PointReplacement: {
      // Target: the wrong-label cell at the lightest point.
      std::uint32_t target_point = 0;
      double lightest = 2.0;
      for (std::uint32_t bits = 0; bits < point_count(d.dim()); ++bits) {
        const double m = d.at(bits, kPlus) + d.at(bits, kMinus);
        if (m < lightest) {
          lightest = m;
          target_point = bits;
        }
      }
      const Label wrong = d.at(target_point, kPlus) <= d.at(target_point, kMinus) &&
                                  d.at(target_point, kPlus) < d.at(target_point, kMinus)
                              ? kPlus
                              : kMinus;
      const std::size_t target = LabeledDistribution::cell(target_point, wrong);
      std::vector<std::size_t> sources(joint.size());
      std::iota(sources.begin(), sources.end(), std::size_t{0});
      std::stable_sort(sources.begin(), sources.end(),
                       [&](std::size_t a, std::size_t b) { return joint[a] > joint[b]; });
      for (std::size_t c : sources) {
        if (remaining <= 0.0) break;
        if (c == target) continue;
        const double take = std::min(remaining, joint[c]);
        joint[c] -= take;
        joint[target] += take;
        remaining -= take;
      }
      break;
    }
    case NoiseMode::WorstLeaf: {
      if (!noise.tree) throw UsageError("worst-leaf noise needs a tree");
      const DensePMF marginal = d.marginal();
      auto leaves = noise.tree->leaves(d.dim());
      std::vector<double> weight(leaves.size());
      for (std::size_t k = 0; k < leaves.size(); ++k) weight[k] = mass_of(marginal, leaves[k]);
      std::vector<std::size_t> by_weight(leaves.size());
      std::iota(by_weight.begin(), by_weight.end(), std::size_t{0});
      std::stable_sort(by_weight.begin(), by_weight.end(),
                       [&](std::size_t a, std::size_t b) { return weight[a] < weight[b]; });
      // The lightest leaf that absorbs all of eta goes first; the rest follow
      // lighter-first as overflow.
      auto first = std::find_if(by_weight.begin(), by_weight.end(), [&](std::size_t k) {
        return weight[k] > 0.0 && weight[k] >= noise.eta;
      });
      if (first != by_weight.end()) std::rotate(by_weight.begin(), first, first + 1);
      for (std::size_t k : by_weight) {
        if (remaining <= 0.0) break;
        const auto order = points_by_mass(d, leaves[k]);
        remaining = flip_labels(joint, order, remaining);
      }
      break;
    }
  }
  if (remaining > kMoveTolerance) {
    throw InfeasibleNoise(to_string(noise.mode) + " cannot move eta=" +
                          std::to_string(noise.eta) + "; short by " + std::to_string(remaining));
  }
  // Renormalize away the sub-tolerance rounding so the result is a valid PMF.
  const double total = sum_masses(joint);
  for (double& v : joint) v /= total;
  return LabeledDistribution(d.dim(), std::move(joint));
}

LeafTvReport<double> leaf_tv_decomposition(const DensePMF& d, const DensePMF& d2,
                                           const DecisionTree& tree) {
  check_same_dim(d.dim(), d2.dim(), "leaf_tv_decomposition");
  return leaf_tv_decomposition<double>(d.dim(), d.mass(), d2.mass(), tree, 1);
}

LeafTvReport<double> leaf_tv_decomposition(const LabeledDistribution& d,
                                           const LabeledDistribution& d2,
                                           const DecisionTree& tree) {
  check_same_dim(d.dim(), d2.dim(), "leaf_tv_decomposition");
  return leaf_tv_decomposition<double>(d.dim(), d.joint(), d2.joint(), tree, 2);
}

bool tribes_accepts(int width, int count, std::uint32_t bits) {
  const std::uint32_t block = (1u << width) - 1u;
  for (int t = 0; t < count; ++t) {
    if (((bits >> (t * width)) & block) == 0) return false;
  }
  return true;
}

DensePMF tribes_support_dist(int width, int count) {
  if (width < 1 || count < 1 || width * count > kMaxDim) {
    throw UsageError("tribes needs width, count >= 1 and width*count <= 24");
  }
  const int n = width * count;
  std::vector<double> mass(point_count(n), 0.0);
  std::uint64_t accepted = 0;
  for (std::uint32_t bits = 0; bits < mass.size(); ++bits) {
    if (tribes_accepts(width, count, bits)) ++accepted;
  }
  if (accepted == 0) throw InvariantViolation("tribes has no accepting input");
  const double p = 1.0 / static_cast<double>(accepted);
  for (std::uint32_t bits = 0; bits < mass.size(); ++bits) {
    if (tribes_accepts(width, count, bits)) mass[bits] = p;
  }
  return DensePMF(n, std::move(mass));
}

SubcubePartition tribes_partition(int width, int count) {
  if (width < 1 || count < 1 || width * count > kMaxDim) {
    throw UsageError("tribes needs width, count >= 1 and width*count <= 24");
  }
  const int n = width * count;
  SubcubePartition out;
  out.depth_bound = count * (width - 1);
  // choice[t] = position of the first +1 in block t.
  std::vector<int> choice(count, 0);
  while (true) {
    std::uint32_t fixed = 0, values = 0;
    for (int t = 0; t < count; ++t) {
      const int base = t * width;
      for (int j = 0; j < choice[t]; ++j) fixed |= 1u << (base + j);
      // The last position is forced by the support once the rest are -1.
      if (choice[t] < width - 1) {
        fixed |= 1u << (base + choice[t]);
        values |= 1u << (base + choice[t]);
      }
    }
    out.pieces.emplace_back(n, fixed, values);
    int t = 0;
    while (t < count && choice[t] == width - 1) choice[t++] = 0;
    if (t == count) break;
    ++choice[t];
  }
  return out;
}

}  // namespace dlift
