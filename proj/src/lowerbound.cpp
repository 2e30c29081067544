#include "dlift/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dlift/parallel.hpp"

namespace dlift {
namespace {

std::uint64_t pow3(int n) {
  std::uint64_t p = 1;
  for (int i = 0; i < n; ++i) p *= 3;
  return p;
}

bool concentrated(std::uint64_t count, int n, int depth) {
  // count in [N/3, 2N/3] with N = 2^(n - depth), compared as 3 count vs N.
  const std::uint64_t big_n = std::uint64_t{1} << (n - depth);
  return 3 * count >= big_n && 3 * count <= 2 * big_n;
}

// Packs the bits of `bits` selected by `mask` into the low positions.
std::uint32_t gather(std::uint32_t bits, std::uint32_t mask) {
  std::uint32_t out = 0;
  int j = 0;
  while (mask != 0) {
    const int i = std::countr_zero(mask);
    out |= ((bits >> i) & 1u) << j++;
    mask &= mask - 1;
  }
  return out;
}

std::uint32_t scatter(std::uint32_t packed, std::uint32_t mask) {
  std::uint32_t out = 0;
  int j = 0;
  while (mask != 0) {
    const int i = std::countr_zero(mask);
    out |= ((packed >> j++) & 1u) << i;
    mask &= mask - 1;
  }
  return out;
}

void record(ConcentrationReport& r, const Restriction& rho, std::uint64_t count, bool keep) {
  ++r.checked;
  if (keep) r.counts.push_back({rho, count});
  if (!concentrated(count, r.n, rho.depth())) r.violations.push_back({rho, count});
}

void sort_by_canonical(std::vector<RestrictionCount>& v) {
  std::sort(v.begin(), v.end(), [](const RestrictionCount& a, const RestrictionCount& b) {
    return canonical_less(a.rho, b.rho);
  });
}

// Leaf offering `capacity` mass at overlap `density` per unit mass.
struct FillItem {
  double density;
  double capacity;
};

// Max overlap sum_x min(D_S(x), D'(x)) for total D' mass 1.
double best_overlap(std::vector<FillItem>& items) {
  std::sort(items.begin(), items.end(),
            [](const FillItem& a, const FillItem& b) { return a.density > b.density; });
  double mass = 1.0, overlap = 0.0;
  for (const auto& it : items) {
    if (mass <= 0.0) break;
    const double take = std::min(mass, it.capacity);
    overlap += take * it.density;
    mass -= take;
  }
  return overlap;
}

std::vector<Restriction> subcubes_within(const Restriction& leaf) {
  std::vector<Restriction> out;
  const std::uint32_t free = leaf.free_mask();
  // Every sub-pattern: choose which free coordinates to fix, then their values.
  std::uint32_t fix = free;
  while (true) {
    std::uint32_t vals = fix;
    while (true) {
      out.emplace_back(leaf.dim(), leaf.fixed() | fix, leaf.values() | vals);
      if (vals == 0) break;
      vals = (vals - 1) & fix;
    }
    if (fix == 0) break;
    fix = (fix - 1) & free;
  }
  return out;
}

std::uint64_t count_in(const HalfSupport& s, const Restriction& rho) {
  std::uint64_t c = 0;
  for (std::uint32_t x : s.members) c += rho.contains_bits(x) ? 1 : 0;
  return c;
}

}  // namespace

DensePMF HalfSupport::distribution() const {
  std::vector<double> mass(std::size_t{1} << n, 0.0);
  const double p = 1.0 / static_cast<double>(members.size());
  for (std::uint32_t x : members) mass[x] = p;
  return DensePMF(n, std::move(mass));
}

HalfSupport HalfSupport::from_members(int n, std::vector<std::uint32_t> members) {
  if (n < 1 || n > kMaxDim) throw UsageError("half support needs 1 <= n <= 24");
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (members.size() != (std::size_t{1} << (n - 1))) {
    throw UsageError("half support must hold exactly 2^(n-1) distinct points");
  }
  HalfSupport s;
  s.n = n;
  s.contains.assign(std::size_t{1} << n, false);
  for (std::uint32_t x : members) {
    if (x >= (std::uint32_t{1} << n)) throw UsageError("member outside the cube");
    s.contains[x] = true;
  }
  s.members = std::move(members);
  return s;
}

HalfSupport draw_half_support(int n, std::uint64_t seed) {
  if (n < 1 || n > kMaxDim) throw UsageError("half support needs 1 <= n <= 24");
  const std::uint32_t size = std::uint32_t{1} << n;
  std::vector<std::uint32_t> perm(size);
  std::iota(perm.begin(), perm.end(), 0u);
  Philox4x32 rng(seed);
  const std::uint32_t half = size / 2;
  for (std::uint32_t i = 0; i < half; ++i) {
    const std::uint32_t j = i + static_cast<std::uint32_t>(rng.below(size - i));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(half);
  return HalfSupport::from_members(n, std::move(perm));
}

ConcentrationReport count_concentration_check(const HalfSupport& s, int d, bool keep_counts) {
  const int n = s.n;
  if (d < 0 || d > n) throw UsageError("depth must lie in [0, n]");
  ConcentrationReport r;
  r.n = n;
  r.d = d;
  const std::uint64_t masks = count_restrictions(n, d);  // upper bound on work per point
  const double direct_cost = static_cast<double>(masks) * static_cast<double>(s.members.size());
  const double dp_cost = n <= 13 ? static_cast<double>(pow3(n)) * n : INFINITY;

  if (dp_cost <= direct_cost) {
    // Digit 0: x_i = -1, 1: x_i = +1, 2: free.
    const std::uint64_t total = pow3(n);
    std::vector<std::uint32_t> cnt(total, 0);
    for (std::uint32_t x : s.members) {
      std::uint64_t idx = 0, p = 1;
      for (int i = 0; i < n; ++i, p *= 3) idx += ((x >> i) & 1u) * p;
      cnt[idx] = 1;
    }
    std::uint64_t p = 1;
    for (int i = 0; i < n; ++i, p *= 3) {
      for (std::uint64_t idx = 0; idx < total; ++idx) {
        if ((idx / p) % 3 == 2) cnt[idx] = cnt[idx - 2 * p] + cnt[idx - p];
      }
    }
    for (std::uint64_t idx = 0; idx < total; ++idx) {
      std::uint32_t fixed = 0, values = 0;
      std::uint64_t rest = idx;
      for (int i = 0; i < n; ++i, rest /= 3) {
        const int digit = static_cast<int>(rest % 3);
        if (digit != 2) fixed |= 1u << i;
        if (digit == 1) values |= 1u << i;
      }
      if (std::popcount(fixed) > d) continue;
      record(r, Restriction(n, fixed, values), cnt[idx], keep_counts);
    }
  } else {
    std::vector<std::uint64_t> hist;
    for (std::uint32_t fixed = 0; fixed < (std::uint32_t{1} << n); ++fixed) {
      const int k = std::popcount(fixed);
      if (k > d) continue;
      hist.assign(std::size_t{1} << k, 0);
      for (std::uint32_t x : s.members) ++hist[gather(x, fixed)];
      for (std::uint32_t packed = 0; packed < hist.size(); ++packed) {
        record(r, Restriction(n, fixed, scatter(packed, fixed)), hist[packed], keep_counts);
      }
    }
  }
  sort_by_canonical(r.violations);
  if (keep_counts) sort_by_canonical(r.counts);
  return r;
}

std::optional<double> tv_lowerbound_certificate(const ConcentrationReport& report) {
  if (!report.violations.empty()) return std::nullopt;
  return 1.0 / 3.0;
}

int default_lowerbound_depth(int n, double c) {
  if (n < 1) throw UsageError("n must be positive");
  const int loss = static_cast<int>(std::ceil(c * std::log2(static_cast<double>(n))));
  return std::max(0, n - loss);
}

MinTvResult min_tv_to_decomposable(const HalfSupport& s, int d, LeafModel model) {
  if (s.n > 5) throw UsageError("exhaustive decomposable search supports n <= 5");
  if (d < 0 || d > s.n) throw UsageError("depth must lie in [0, n]");
  const double q = 1.0 / static_cast<double>(s.members.size());
  MinTvResult best;
  bool have = false;
  for (const DecisionTree& tree : enumerate_trees(Restriction::all(s.n), d)) {
    ++best.trees_checked;
    const auto leaves = tree.leaves(s.n);
    double overlap = 0.0;
    if (model == LeafModel::Constant) {
      std::vector<FillItem> items;
      for (const Restriction& leaf : leaves) {
        const double vol = static_cast<double>(leaf.volume());
        items.push_back({static_cast<double>(count_in(s, leaf)) / vol, q * vol});
      }
      overlap = best_overlap(items);
    } else {
      std::vector<std::vector<FillItem>> options;
      std::uint64_t combos = 1;
      for (const Restriction& leaf : leaves) {
        std::vector<FillItem> opts;
        for (const Restriction& sub : subcubes_within(leaf)) {
          const double vol = static_cast<double>(sub.volume());
          opts.push_back({static_cast<double>(count_in(s, sub)) / vol, q * vol});
        }
        combos *= opts.size();
        options.push_back(std::move(opts));
      }
      if (combos > 50'000'000) throw UsageError("subcube leaf search too large");
      std::vector<std::size_t> pick(options.size(), 0);
      std::vector<FillItem> items(options.size());
      while (true) {
        for (std::size_t k = 0; k < options.size(); ++k) items[k] = options[k][pick[k]];
        overlap = std::max(overlap, best_overlap(items));
        std::size_t k = 0;
        while (k < pick.size() && ++pick[k] == options[k].size()) pick[k++] = 0;
        if (k == pick.size()) break;
      }
    }
    const double tv = 1.0 - overlap;
    if (!have || tv < best.min_tv) {
      have = true;
      best.min_tv = tv;
      best.tree = tree;
    }
  }
  return best;
}

bool has_collision(std::span<const std::uint32_t> samples) {
  std::vector<std::uint32_t> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

int chi2_prefix_distinguisher(std::span<const std::uint32_t> samples, int n, int k) {
  k = std::min(k, n);
  const std::size_t bins = std::size_t{1} << k;
  std::vector<double> hist(bins, 0.0);
  for (std::uint32_t x : samples) hist[x & (bins - 1)] += 1.0;
  const double expected = static_cast<double>(samples.size()) / static_cast<double>(bins);
  if (expected == 0.0) return 0;
  double chi2 = 0.0;
  for (double o : hist) chi2 += (o - expected) * (o - expected) / expected;
  return chi2 > static_cast<double>(bins - 1) ? 1 : 0;
}

int collision_distinguisher(std::span<const std::uint32_t> samples, int) {
  return has_collision(samples) ? 1 : 0;
}

Distinguisher make_distinguisher(const std::string& name) {
  if (name == "chi2-prefix") {
    return [](std::span<const std::uint32_t> s, int n) { return chi2_prefix_distinguisher(s, n); };
  }
  if (name == "collision") return collision_distinguisher;
  throw ConfigError("unknown distinguisher: " + name);
}

std::vector<std::string> distinguisher_names() { return {"chi2-prefix", "collision"}; }

CollisionReport collision_experiment(int n, std::uint64_t m, std::uint64_t trials,
                                     std::uint64_t seed, const std::string& distinguisher) {
  if (n < 2 || n > kMaxDim) throw UsageError("collision experiment needs 2 <= n <= 24");
  if (static_cast<double>(m) > std::pow(2.0, n / 2.0)) {
    throw UsageError("m must not exceed 2^(n/2)");
  }
  if (trials == 0) throw UsageError("trials must be positive");
  const Distinguisher dist = make_distinguisher(distinguisher);
  const std::uint64_t cube = std::uint64_t{1} << n;
  const std::uint64_t half = cube / 2;
  std::vector<char> coll_u(trials), coll_h(trials), acc_u(trials), acc_h(trials);
  parallel_for(trials, [&](std::size_t t) {
    Philox4x32 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::uint32_t> uni(m), hs(m);
    for (auto& x : uni) x = static_cast<std::uint32_t>(rng.below(cube));
    // D_S for a fresh uniformly random half support S, drawn lazily: given the
    // k distinct members seen so far, the next draw repeats one of them with
    // probability k / 2^(n-1) and is otherwise a uniform unseen point.
    std::vector<std::uint32_t> seen;
    for (auto& x : hs) {
      if (!seen.empty() && rng.below(half) < seen.size()) {
        x = seen[rng.below(seen.size())];
        continue;
      }
      std::uint32_t cand;
      do {
        cand = static_cast<std::uint32_t>(rng.below(cube));
      } while (std::find(seen.begin(), seen.end(), cand) != seen.end());
      seen.push_back(cand);
      x = cand;
    }
    coll_u[t] = has_collision(uni);
    coll_h[t] = has_collision(hs);
    acc_u[t] = static_cast<char>(dist(uni, n));
    acc_h[t] = static_cast<char>(dist(hs, n));
  });
  auto mean = [&](const std::vector<char>& v) {
    return static_cast<double>(std::accumulate(v.begin(), v.end(), std::uint64_t{0})) /
           static_cast<double>(trials);
  };
  CollisionReport r;
  r.n = n;
  r.m = m;
  r.trials = trials;
  r.p_collision_uniform = mean(coll_u);
  r.p_collision_half = mean(coll_h);
  const double pairs = static_cast<double>(m) * static_cast<double>(m - (m > 0 ? 1 : 0)) / 2.0;
  r.bound_uniform = pairs / static_cast<double>(cube);
  r.bound_half = 2.0 * pairs / static_cast<double>(cube);
  auto sigma = [&](double p) { return std::sqrt(std::max(p * (1.0 - p), 0.0) / trials); };
  r.sigma_uniform = sigma(std::min(r.bound_uniform, 1.0));
  r.sigma_half = sigma(std::min(r.bound_half, 1.0));
  r.within_bounds = r.p_collision_uniform <= r.bound_half + 5.0 * r.sigma_half &&
                    r.p_collision_half <= r.bound_half + 5.0 * r.sigma_half;
  r.distinguisher = distinguisher;
  r.accept_uniform = mean(acc_u);
  r.accept_half = mean(acc_h);
  r.advantage = std::abs(r.accept_uniform - r.accept_half);
  return r;
}

HoeffdingReport hoeffding_wor_check(std::span<const double> population, std::uint64_t n_draws,
                                    double eps, std::uint64_t trials, std::uint64_t seed) {
  if (population.empty() || n_draws == 0 || n_draws > population.size()) {
    throw UsageError("need 1 <= n_draws <= population size");
  }
  if (trials == 0) throw UsageError("trials must be positive");
  for (double v : population) {
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError("population values must lie in [0,1]");
  }
  const double mean = std::accumulate(population.begin(), population.end(), 0.0) /
                      static_cast<double>(population.size());
  const double mu = mean * static_cast<double>(n_draws);
  const double threshold = static_cast<double>(n_draws) * eps - 1e-9;
  std::vector<char> wor(trials), wr(trials);
  parallel_for(trials, [&](std::size_t t) {
    Philox4x32 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<double> pop(population.begin(), population.end());
    double x = 0.0;
    for (std::uint64_t i = 0; i < n_draws; ++i) {
      const std::size_t j = i + rng.below(pop.size() - i);
      std::swap(pop[i], pop[j]);
      x += pop[i];
    }
    wor[t] = std::abs(x - mu) >= threshold;
    double y = 0.0;
    for (std::uint64_t i = 0; i < n_draws; ++i) y += population[rng.below(population.size())];
    wr[t] = std::abs(y - mu) >= threshold;
  });
  HoeffdingReport r;
  r.tail_without_replacement =
      static_cast<double>(std::accumulate(wor.begin(), wor.end(), std::uint64_t{0})) / trials;
  r.tail_with_replacement =
      static_cast<double>(std::accumulate(wr.begin(), wr.end(), std::uint64_t{0})) / trials;
  r.bound = 2.0 * std::exp(-2.0 * eps * eps * static_cast<double>(n_draws));
  const double b = std::min(r.bound, 1.0);
  r.sigma = std::sqrt(b * (1.0 - b) / static_cast<double>(trials));
  return r;
}

}  // namespace dlift
