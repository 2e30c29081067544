#include "dlift/learners.hpp"

#include <cmath>
#include <map>

namespace dlift {
namespace {

void subsets_up_to(const std::vector<int>& coords, int k, std::size_t start, std::uint32_t mask,
                   int size, std::vector<std::uint32_t>& out) {
  out.push_back(mask);
  if (size == k) return;
  for (std::size_t j = start; j < coords.size(); ++j) {
    subsets_up_to(coords, k, j + 1, mask | (1u << coords[j]), size + 1, out);
  }
}

std::uint64_t ceil_u64(double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError("sample size is not finite");
  return static_cast<std::uint64_t>(std::ceil(v));
}

}  // namespace

Hypothesis BaseLearner::operator()(const LabeledSample& s, std::uint64_t seed) const {
  if (s.empty()) return Hypothesis::constant(kPlus);
  return learn(s, seed);
}

Hypothesis plurality_learner(const LabeledSample& s, std::uint64_t) {
  std::uint64_t plus = 0, minus = 0;
  for (const auto& e : s.items()) (e.y == kPlus ? plus : minus) += e.count;
  return Hypothesis::constant(plus >= minus ? kPlus : kMinus);
}

Hypothesis lowdegree_learner(const LabeledSample& s, int k, std::uint64_t) {
  if (k < 0) throw UsageError("degree must be nonnegative");
  const int n = s.dim();
  if (s.empty()) return Hypothesis::constant(kPlus);
  std::uint32_t all_and = ~0u, all_or = 0;
  for (const auto& e : s.items()) {
    all_and &= e.x.bits();
    all_or |= e.x.bits();
  }
  std::vector<int> free;
  for (int i = 0; i < n; ++i) {
    if (((all_and ^ all_or) >> i) & 1u) free.push_back(i);
  }
  std::vector<std::uint32_t> masks;
  subsets_up_to(free, k, 0, 0, 0, masks);
  std::vector<Monomial> terms;
  terms.reserve(masks.size());
  for (std::uint32_t mask : masks) {
    std::int64_t acc = 0;
    for (const auto& e : s.items()) {
      const bool odd = std::popcount(mask & ~e.x.bits()) & 1;
      const std::int64_t v = static_cast<std::int64_t>(e.count) * e.y;
      acc += odd ? -v : v;
    }
    if (acc != 0) terms.push_back({mask, acc});
  }
  return Hypothesis::polynomial(n, std::move(terms));
}

Hypothesis memorizing_learner(const LabeledSample& s, std::uint64_t) {
  std::map<std::uint32_t, std::int64_t> votes;
  for (const auto& e : s.items()) {
    votes[e.x.bits()] += static_cast<std::int64_t>(e.count) * e.y;
  }
  std::vector<std::pair<std::uint32_t, Label>> table;
  for (const auto& [bits, v] : votes) {
    if (v < 0) table.emplace_back(bits, kMinus);
  }
  return Hypothesis::lookup(s.dim(), std::move(table), kPlus);
}

BaseLearner plurality(double eps) {
  BaseLearner a;
  a.name = "plurality";
  a.learn = [](const LabeledSample& s, std::uint64_t seed) { return plurality_learner(s, seed); };
  // Constant targets on any distribution: a handful of draws decides the majority.
  a.sample_complexity = [](int, double e) { return ceil_u64(std::log(1.0 / e)); };
  a.family = uniform_on_subcube_family();
  a.eps = eps;
  a.robustness = 1.0;
  return a;
}

BaseLearner lowdegree(int k, double eps) {
  if (k < 0 || k > 4) throw UsageError("lowdegree supports degrees 0..4");
  BaseLearner a;
  a.name = "lowdegree-" + std::to_string(k);
  a.learn = [k](const LabeledSample& s, std::uint64_t seed) {
    return lowdegree_learner(s, k, seed);
  };
  a.sample_complexity = [k](int n, double e) {
    const double nn = std::max(n, 2);
    return ceil_u64(kLowDegreeConstant * std::pow(nn, k) * std::log(nn) / (e * e));
  };
  a.family = uniform_on_subcube_family();
  a.eps = eps;
  return a;
}

BaseLearner memorizing(double eps) {
  BaseLearner a;
  a.name = "memorize";
  a.learn = [](const LabeledSample& s, std::uint64_t seed) { return memorizing_learner(s, seed); };
  a.sample_complexity = [](int n, double e) {
    const double points = std::ldexp(1.0, n);
    return ceil_u64(points * std::log(points / e));
  };
  a.family = uniform_on_subcube_family();
  a.eps = eps;
  // Flipping a point takes just over half its mass, so the clean error can
  // reach twice the corruption budget.
  a.robustness = 2.0;
  return a;
}

BaseLearner make_learner(const std::string& name, double eps) {
  if (name == "plurality") return plurality(eps);
  if (name == "memorize" || name == "memorizing") return memorizing(eps);
  if (name == "lowdegree") return lowdegree(1, eps);
  if (name.rfind("lowdegree-", 0) == 0) {
    const std::string deg = name.substr(10);
    if (deg.size() == 1 && deg[0] >= '0' && deg[0] <= '4') return lowdegree(deg[0] - '0', eps);
  }
  throw ConfigError("unknown learner: " + name);
}

std::vector<std::string> learner_names() {
  return {"plurality", "memorize", "lowdegree-0", "lowdegree-1", "lowdegree-2", "lowdegree-3",
          "lowdegree-4"};
}

BoostConfig BoostConfig::make(double eps, double delta) {
  if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0)) {
    throw UsageError("boost needs eps and delta in (0,1)");
  }
  BoostConfig c;
  c.eps = eps;
  c.delta = delta;
  const double log_inv = std::log(1.0 / delta);
  c.copies = std::max(1, static_cast<int>(std::ceil(kBoostCopies * log_inv)));
  c.test_size = ceil_u64(kBoostTestScale * log_inv / (eps * eps));
  return c;
}

std::uint64_t BoostConfig::required(std::uint64_t m_per_copy) const {
  return static_cast<std::uint64_t>(copies) * m_per_copy + test_size;
}

BoostResult boost(const BaseLearner& a, const BoostConfig& cfg, const LabeledSample& source,
                  std::uint64_t m_per_copy, std::uint64_t seed) {
  if (cfg.copies < 1) throw UsageError("boost needs at least one copy");
  const std::uint64_t need = cfg.required(m_per_copy);
  if (source.size() < need) {
    throw UsageError("boost needs M=" + std::to_string(need) + " samples (" +
                     std::to_string(cfg.copies) + " x " + std::to_string(m_per_copy) + " + " +
                     std::to_string(cfg.test_size) + "), got " + std::to_string(source.size()));
  }
  const LabeledSample validation =
      source.slice(static_cast<std::uint64_t>(cfg.copies) * m_per_copy, cfg.test_size);
  BoostResult out;
  for (int i = 0; i < cfg.copies; ++i) {
    const LabeledSample train = source.slice(static_cast<std::uint64_t>(i) * m_per_copy, m_per_copy);
    Hypothesis h = a(train, derive_seed(seed, static_cast<std::uint64_t>(i)));
    const ErrorCount err = raw_error(h, validation);
    out.validation.push_back(err);
    if (i == 0 || err.mistakes < out.validation[out.chosen].mistakes) {
      out.chosen = i;
      out.hypothesis = h;
    }
  }
  return out;
}

}  // namespace dlift
