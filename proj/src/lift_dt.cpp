#include "dlift/lift_dt.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <unordered_map>

#include "dlift/parallel.hpp"

namespace dlift {

std::uint64_t LiftDtConfig::default_m_train(const BaseLearner& a, int n, int d, double eps) {
  const double m = static_cast<double>(a.m(n, eps));
  return static_cast<std::uint64_t>(std::ceil(std::ldexp(1.0, d) / eps * std::max(2.0 * m, 8.0)));
}

std::uint64_t LiftDtConfig::default_m_test(int n, int d, double eps) {
  const double ln_n = std::log(std::max(n, 2));
  return static_cast<std::uint64_t>(
      std::ceil(kTreeTestConstant * std::ldexp(1.0, d) * ln_n / (eps * eps)));
}

HypothesisMap train_hypothesis_map(const BaseLearner& a, const LabeledSample& train, int d,
                                   std::uint64_t master_seed, TrainingStats* stats) {
  const auto start = std::chrono::steady_clock::now();
  const int n = train.dim();
  const auto restrictions = enumerate_restrictions(n, d);
  const LabeledSample compact = train.compacted();
  std::vector<Hypothesis> learned(restrictions.size());
  std::atomic<std::uint64_t> calls{0}, empty{0};
  parallel_for(restrictions.size(), [&](std::size_t k) {
    const LabeledSample sub = filter_sample(compact, restrictions[k]);
    if (sub.empty()) ++empty;
    ++calls;
    learned[k] = a(sub, derive_seed(master_seed, restrictions[k].encode()));
  });
  HypothesisMap h(n);
  for (std::size_t k = 0; k < restrictions.size(); ++k) h.insert(restrictions[k], learned[k]);
  if (stats != nullptr) {
    stats->learner_calls += calls.load();
    stats->empty_samples += empty.load();
    stats->seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return h;
}

namespace {

struct Search {
  const HypothesisMap& h;
  FindTreeStats& stats;
  bool memoize;
  std::unordered_map<std::uint64_t, FindTreeResult> memo;

  FindTreeResult run(const LabeledSample& s, int d, const Restriction& rho) {
    ++stats.invocations;
    // Bits 24..31 of rho.key() are unused since n <= 24.
    const std::uint64_t key = rho.key() | (static_cast<std::uint64_t>(d) << 24);
    if (memoize) {
      const auto it = memo.find(key);
      if (it != memo.end()) {
        ++stats.memo_hits;
        return it->second;
      }
    }
    FindTreeResult best;
    if (d == 0) {
      ++stats.leaf_evaluations;
      best.error = raw_error(h.at(rho), s);
    } else {
      bool have = false;
      for (int i = 0; i < rho.dim(); ++i) {
        if (!rho.is_free(i)) continue;
        const Restriction minus_rho = rho.refine(i, kMinus);
        const Restriction plus_rho = rho.refine(i, kPlus);
        const FindTreeResult minus = run(filter_sample(s, minus_rho), d - 1, minus_rho);
        const FindTreeResult plus = run(filter_sample(s, plus_rho), d - 1, plus_rho);
        ErrorCount err = minus.error;
        err += plus.error;
        if (!have || err.mistakes < best.error.mistakes) {
          have = true;
          best.tree = DecisionTree::split(i, minus.tree, plus.tree);
          best.error = err;
        }
      }
    }
    if (memoize) memo.emplace(key, best);
    return best;
  }
};

}  // namespace

FindTreeResult find_tree(const LabeledSample& test, int d, const HypothesisMap& h,
                         const Restriction& rho, FindTreeStats* stats, bool memoize) {
  if (d < 0) throw UsageError("depth must be nonnegative");
  if (d > std::popcount(rho.free_mask())) {
    throw UsageError("depth " + std::to_string(d) + " exceeds the free coordinates of " +
                     rho.encode());
  }
  if (test.dim() != h.dim() || rho.dim() != h.dim()) {
    throw UsageError("dimension mismatch in find_tree");
  }
  FindTreeStats local;
  Search search{h, stats != nullptr ? *stats : local, memoize, {}};
  return search.run(filter_sample(test.compacted(), rho), d, rho);
}

TreeLearnResult tree_learn(const BaseLearner& a, const LabeledSample& train,
                           const LabeledSample& test, int d, std::uint64_t master_seed,
                           bool memoize) {
  if (train.dim() != test.dim()) throw UsageError("train and test dimensions differ");
  TreeLearnResult out;
  out.map = train_hypothesis_map(a, train, d, master_seed, &out.training);
  const FindTreeResult found =
      find_tree(test, d, out.map, Restriction::all(test.dim()), &out.search, memoize);
  out.tree = found.tree;
  out.test_error = found.error;
  out.hypothesis = Hypothesis::tree(test.dim(), out.tree, out.map);
  return out;
}

std::uint64_t count_findtree_calls(int n, int d) {
  std::uint64_t total = 0, term = 1;
  for (int j = 0; j <= d; ++j) {
    total += term;
    term *= 2 * static_cast<std::uint64_t>(n - j);
  }
  return total;
}

std::uint64_t findtree_call_bound(int n, int d) {
  std::uint64_t total = 0, term = 1;
  for (int j = 0; j <= d; ++j) {
    total += term;
    term *= 2 * static_cast<std::uint64_t>(n);
  }
  return total;
}

}  // namespace dlift
