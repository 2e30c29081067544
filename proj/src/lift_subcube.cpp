#include "dlift/lift_subcube.hpp"

#include <cmath>

namespace dlift {
namespace {

// a/b < c/d for nonnegative counts with b, d > 0.
bool ratio_less(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  return static_cast<unsigned __int128>(a) * d < static_cast<unsigned __int128>(c) * b;
}

bool eligible(std::uint64_t covered, std::uint64_t remaining, int s) {
  return covered > 0 && static_cast<unsigned __int128>(2 * static_cast<std::uint64_t>(s)) * covered >=
                            remaining;
}

}  // namespace

std::uint64_t LiftSubcubeConfig::default_m_train(const BaseLearner& a, int n, int s, double eps) {
  const double log_inv = std::log(1.0 / eps);
  const double m = static_cast<double>(a.m(n, eps / log_inv));
  return static_cast<std::uint64_t>(std::ceil(s * log_inv / eps * std::max(2.0 * m, 8.0)));
}

std::uint64_t LiftSubcubeConfig::default_m_test(int n, int s, int d, double eps) {
  const double log_inv = std::log(1.0 / eps);
  const double ln_n = std::log(std::max(n, 2));
  return static_cast<std::uint64_t>(std::ceil(kPartitionTestConstant * s * std::max(d, 1) * ln_n *
                                              log_inv * log_inv * log_inv / (eps * eps)));
}

std::uint64_t iteration_cap(int s, double eps_additional) {
  if (s < 1) throw UsageError("s must be at least 1");
  if (!(eps_additional > 0.0 && eps_additional <= 1.0)) {
    throw UsageError("eps_additional must lie in (0,1]");
  }
  const double cap = std::ceil(2.0 * s * std::log(1.0 / eps_additional));
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(cap));
}

std::string to_string(HaltReason r) {
  switch (r) {
    case HaltReason::ReachedTarget: return "reached-target";
    case HaltReason::IterationCap: return "iteration-cap";
    case HaltReason::NoEligible: return "no-eligible";
  }
  return "?";
}

std::optional<Label> PartitionPredictor::operator()(const Point& x) const {
  for (const Restriction& piece : p.pieces) {
    if (piece.contains(x)) return h.at(piece)(x);
  }
  return std::nullopt;
}

FindSubcubeResult find_subcube(const LabeledSample& test, const HypothesisMap& h,
                               double eps_additional, int s) {
  FindSubcubeResult out;
  out.cap = iteration_cap(s, eps_additional);
  const LabeledSample compact = test.compacted();
  const auto items = compact.items();
  const std::uint64_t total = compact.size();
  if (total == 0) return out;

  const auto entries = h.entries();
  const std::size_t r_count = entries.size();
  std::vector<std::uint64_t> covered(r_count, 0), mistakes(r_count, 0);
  // item -> (restriction, hypothesis wrong on item)
  std::vector<std::vector<std::pair<std::uint32_t, bool>>> owners(items.size());
  for (std::size_t r = 0; r < r_count; ++r) {
    const Restriction& rho = entries[r].first;
    const Hypothesis& hyp = entries[r].second;
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (!rho.contains_bits(items[k].x.bits())) continue;
      const bool wrong = hyp(items[k].x) != items[k].y;
      owners[k].emplace_back(static_cast<std::uint32_t>(r), wrong);
      covered[r] += items[k].count;
      if (wrong) mistakes[r] += items[k].count;
    }
  }
  std::vector<bool> removed(items.size(), false);
  std::uint64_t remaining = total;
  const double n_total = static_cast<double>(total);

  while (static_cast<double>(remaining) / n_total > eps_additional && out.trace.size() < out.cap) {
    std::optional<std::size_t> pick;
    for (std::size_t r = 0; r < r_count; ++r) {
      if (!eligible(covered[r], remaining, s)) continue;
      if (!pick || ratio_less(mistakes[r], covered[r], mistakes[*pick], covered[*pick])) pick = r;
    }
    if (!pick) {
      out.halt = HaltReason::NoEligible;
      break;
    }
    const std::size_t r = *pick;
    GreedyStep step;
    step.rho = entries[r].first;
    step.remaining = static_cast<double>(remaining) / n_total;
    step.covered = covered[r];
    step.piece_error = {mistakes[r], covered[r]};
    step.error = step.piece_error.value();
    out.trace.push_back(step);
    out.list.entries.push_back(entries[r].first);
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (removed[k] || !entries[r].first.contains_bits(items[k].x.bits())) continue;
      removed[k] = true;
      remaining -= items[k].count;
      for (const auto& [owner, wrong] : owners[k]) {
        covered[owner] -= items[k].count;
        if (wrong) mistakes[owner] -= items[k].count;
      }
    }
  }
  out.final_remaining = static_cast<double>(remaining) / n_total;
  if (out.halt != HaltReason::NoEligible) {
    out.halt = out.final_remaining <= eps_additional ? HaltReason::ReachedTarget
                                                     : HaltReason::IterationCap;
  }
  out.error = raw_error(ListPredictor{out.list, h}, compact);
  return out;
}

double telescoped_error(const FindSubcubeResult& r) {
  double err = r.final_remaining;
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const double next = i + 1 < r.trace.size() ? r.trace[i + 1].remaining : r.final_remaining;
    err += (r.trace[i].remaining - next) * r.trace[i].error;
  }
  return err;
}

double greedy_error_bound(double eps_hat, double eps_additional) {
  return eps_hat * (2.0 + 2.0 * std::log(1.0 / eps_additional)) + eps_additional;
}

PartitionLearnResult partition_learn(const BaseLearner& a, int d, int s, double eps,
                                     const LabeledSample& train, const LabeledSample& test,
                                     std::uint64_t master_seed) {
  if (!(eps > 0.0 && eps < 1.0)) throw UsageError("eps must lie in (0,1)");
  PartitionLearnResult out;
  out.learner_eps = eps / std::log(1.0 / eps);
  out.map = train_hypothesis_map(a, train, d, master_seed, &out.training);
  out.search = find_subcube(test, out.map, eps, s);
  return out;
}

std::vector<GreedyWitness> greedy_certificate(const LabeledSample& test, const HypothesisMap& h,
                                              const SubcubePartition& p,
                                              const FindSubcubeResult& run, double eps_hat,
                                              int s) {
  const LabeledSample compact = test.compacted();
  const auto items = compact.items();
  const double total = static_cast<double>(compact.size());
  std::vector<bool> removed(items.size(), false);
  std::vector<GreedyWitness> out;
  for (std::size_t i = 0; i < run.trace.size(); ++i) {
    std::uint64_t remaining = 0;
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (!removed[k]) remaining += items[k].count;
    }
    GreedyWitness w;
    w.iteration = i;
    w.remaining = static_cast<double>(remaining) / total;
    w.error_limit = 2.0 * eps_hat * total / static_cast<double>(remaining);
    for (const Restriction& piece : p.pieces) {
      const Hypothesis& hyp = h.at(piece);
      std::uint64_t cov = 0, mis = 0;
      for (std::size_t k = 0; k < items.size(); ++k) {
        if (removed[k] || !piece.contains_bits(items[k].x.bits())) continue;
        cov += items[k].count;
        if (hyp(items[k].x) != items[k].y) mis += items[k].count;
      }
      if (!eligible(cov, remaining, s)) continue;
      const double err = static_cast<double>(mis) / static_cast<double>(cov);
      if (err > w.error_limit) continue;
      if (!w.piece || err < w.error) {
        w.piece = piece;
        w.coverage = static_cast<double>(cov) / static_cast<double>(remaining);
        w.error = err;
      }
    }
    out.push_back(w);
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (run.trace[i].rho.contains_bits(items[k].x.bits())) removed[k] = true;
    }
  }
  return out;
}

}  // namespace dlift
