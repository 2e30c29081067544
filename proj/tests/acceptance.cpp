// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
//   acceptance            all criteria
//   acceptance 2 6        selected criteria

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dlift/learners.hpp"
#include "dlift/lift_dt.hpp"
#include "dlift/lift_subcube.hpp"
#include "dlift/lowerbound.hpp"
#include "dlift/parallel.hpp"
#include "dlift/planted.hpp"

using namespace dlift;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::uint64_t binom(int n, int k) {
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

// ---------------------------------------------------------------------------
// 1. FindTree returns a minimum-error tree

Outcome findtree_exactness() {
  Philox4x32 g(derive_seed(1, "findtree"));
  const int instances = 600;
  int mismatches = 0;
  for (int k = 0; k < instances; ++k) {
    const int n = 1 + static_cast<int>(g.below(6));
    const int d = static_cast<int>(g.below(std::min(n, 2) + 1));
    HypothesisMap h(n);
    for (const auto& rho : enumerate_restrictions(n, d)) {
      // constants, literals and parities
      const auto pick = g.below(3);
      if (pick == 0) {
        h.insert(rho, Hypothesis::constant(g.below(2) ? kPlus : kMinus));
      } else if (pick == 1) {
        h.insert(rho, Hypothesis::majority(n, {{static_cast<int>(g.below(n)), g.below(2) ? kPlus : kMinus}}));
      } else {
        h.insert(rho, Hypothesis::parity(n, static_cast<std::uint32_t>(g.below(1u << n))));
      }
    }
    LabeledSample test(n);
    const std::uint64_t size = 1 + g.below(64);
    for (std::uint64_t i = 0; i < size; ++i) {
      test.add(Point(n, static_cast<std::uint32_t>(g.below(1u << n))), g.below(2) ? kPlus : kMinus);
    }
    const auto found = find_tree(test, d, h, Restriction::all(n));
    std::uint64_t best = ~0ull;
    for (const auto& t : enumerate_trees(Restriction::all(n), d)) {
      const auto err =
          raw_error([&](const Point& x) { return eval_tree_hypothesis(t, h, x); }, test);
      best = std::min(best, err.mistakes);
    }
    const auto check =
        raw_error([&](const Point& x) { return eval_tree_hypothesis(found.tree, h, x); }, test);
    if (found.error.mistakes != best || check.mistakes != best) ++mismatches;
  }
  return {mismatches == 0,
          fmt("%d instances (n<=6, d<=2, |S_test|<=64), %d differ from exhaustive minimum", instances,
              mismatches)};
}

// ---------------------------------------------------------------------------
// 2 and 3. Tree lifter end to end, plus call counts

struct DtCell {
  int n = 0, d = 0;
  std::vector<double> lifted, under;
  std::uint64_t calls_expected = 0;
  std::set<std::uint64_t> calls_seen;
  std::uint64_t max_invocations = 0;
  std::uint64_t plain_invocations = 0;
};

std::vector<DtCell> dt_cells;

void run_dt_cells() {
  if (!dt_cells.empty()) return;
  const double eps = 0.05;
  const int trials = 50;
  for (auto [n, d] : std::vector<std::pair<int, int>>{{8, 1}, {8, 2}, {10, 1}, {10, 2}}) {
    DtCell cell;
    cell.n = n;
    cell.d = d;
    for (int k = 0; k <= d; ++k) cell.calls_expected += binom(n, k) << k;
    cell.lifted.resize(trials);
    cell.under.resize(trials);
    std::vector<std::uint64_t> calls(trials), invocations(trials);
    const auto a = lowdegree(1, eps);
    const auto m_train = LiftDtConfig::default_m_train(a, n, d, eps);
    const auto m_test = LiftDtConfig::default_m_test(n, d, eps);
    parallel_for(trials, [&](std::size_t t) {
      const std::uint64_t seed = derive_seed(derive_seed(2, n * 10 + d), t);
      const auto planted = plant_random_tree(n, d, derive_seed(seed, "plant"));
      const auto dist = planted.labeled();
      const auto train = sample_counts(dist, m_train, derive_seed(seed, "train"));
      const auto test = sample_counts(dist, m_test, derive_seed(seed, "test"));
      const auto full = tree_learn(a, train, test, d, seed);
      const auto short_budget = tree_learn(a, train, test, d - 1, seed);
      cell.lifted[t] = true_error(full.hypothesis, dist);
      cell.under[t] = true_error(short_budget.hypothesis, dist);
      calls[t] = full.training.learner_calls;
      invocations[t] = full.search.invocations;
      if (t == 0) {
        FindTreeStats plain;
        find_tree(test, d, full.map, Restriction::all(n), &plain, false);
        cell.plain_invocations = plain.invocations;
      }
    });
    cell.calls_seen.insert(calls.begin(), calls.end());
    cell.max_invocations = *std::max_element(invocations.begin(), invocations.end());
    dt_cells.push_back(std::move(cell));
  }
}

Outcome dt_end_to_end() {
  run_dt_cells();
  bool ok = true;
  std::ostringstream os;
  for (const auto& c : dt_cells) {
    const double lifted = mean(c.lifted), under = mean(c.under);
    const bool cell_ok = lifted <= 4 * 0.05 && lifted <= under;
    ok &= cell_ok;
    os << fmt("n=%d d=%d: mean err %.4f (<= 0.2), depth %d: %.4f; ", c.n, c.d, lifted, c.d - 1, under);
  }
  std::string s = os.str();
  s.resize(s.size() - 2);
  return {ok, "50 trials each; " + s};
}

Outcome call_counts() {
  run_dt_cells();
  bool ok = true;
  std::ostringstream os;
  for (const auto& c : dt_cells) {
    if (!((c.n == 8 && c.d == 1) || (c.n == 8 && c.d == 2) || (c.n == 10 && c.d == 2))) continue;
    const auto bound = findtree_call_bound(c.n, c.d);
    const bool exact = c.calls_seen.size() == 1 && *c.calls_seen.begin() == c.calls_expected;
    const bool under = c.max_invocations <= bound && c.plain_invocations <= bound;
    ok &= exact && under;
    os << fmt("(n=%d,d=%d) calls %llu = %llu, FindTree %llu memo / %llu plain <= %llu; ", c.n, c.d,
              static_cast<unsigned long long>(*c.calls_seen.rbegin()),
              static_cast<unsigned long long>(c.calls_expected),
              static_cast<unsigned long long>(c.max_invocations),
              static_cast<unsigned long long>(c.plain_invocations),
              static_cast<unsigned long long>(bound));
  }
  std::string s = os.str();
  s.resize(s.size() - 2);
  return {ok, s};
}

// ---------------------------------------------------------------------------
// 4 and 5. Greedy list guarantee and per-iteration witness

struct GreedyTally {
  int runs = 0;
  int bound_violations = 0;
  int length_violations = 0;
  int remaining_violations = 0;
  int cap_hits = 0;
  int no_eligible = 0;
  int witness_runs = 0;
  int witness_checks = 0;
  int witness_violations = 0;
  double max_ratio = 0.0;  // list error / bound
};

GreedyTally greedy;
bool greedy_done = false;

void run_greedy() {
  if (greedy_done) return;
  greedy_done = true;
  const double eps_a = 0.05;
  struct Job {
    int n, s, d;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int n : {6, 8, 10}) {
    for (auto [s, d] : std::vector<std::pair<int, int>>{{1, 0}, {2, 1}, {2, 2}, {3, 2}, {4, 2}}) {
      for (std::uint64_t k = 0; k < 14; ++k) jobs.push_back({n, s, d, derive_seed(4, n * 100 + s * 10 + d) + k});
    }
  }
  std::mutex mu;
  parallel_for(jobs.size(), [&](std::size_t j) {
    const Job job = jobs[j];
    const auto planted = plant_random_partition(job.n, job.s, job.d, job.seed);
    const auto dist = planted.labeled();
    const auto train = sample_counts(dist, 20000, derive_seed(job.seed, "train"));
    const auto test = sample_counts(dist, 4000, derive_seed(job.seed, "test"));
    const auto map = train_hypothesis_map(lowdegree(1, 0.1), train, job.d, job.seed);
    const auto run = find_subcube(test, map, eps_a, job.s);
    const SubcubePartition p = planted.partition();
    const double eps_hat = empirical_error(PartitionPredictor{p, map}, test);
    const double bound = greedy_error_bound(eps_hat, eps_a);
    const auto witnesses = greedy_certificate(test, map, p, run, eps_hat, job.s);
    std::lock_guard<std::mutex> lock(mu);
    ++greedy.runs;
    greedy.bound_violations += run.error.value() > bound;
    greedy.max_ratio = std::max(greedy.max_ratio, run.error.value() / bound);
    greedy.length_violations += run.list.size() > iteration_cap(job.s, eps_a);
    greedy.cap_hits += run.halt == HaltReason::IterationCap;
    greedy.no_eligible += run.halt == HaltReason::NoEligible;
    if (run.halt != HaltReason::IterationCap) greedy.remaining_violations += run.final_remaining > eps_a;
    ++greedy.witness_runs;
    for (const auto& w : witnesses) {
      ++greedy.witness_checks;
      const bool good = w.piece && w.coverage >= 1.0 / (2 * job.s) && w.error <= w.error_limit;
      greedy.witness_violations += !good;
    }
  });
}

Outcome greedy_guarantee() {
  run_greedy();
  const auto& g = greedy;
  const int violations = g.bound_violations + g.length_violations + g.remaining_violations;
  return {violations == 0 && g.runs >= 200,
          fmt("%d runs (n in {6,8,10}, (s,d) in {(1,0),(2,1),(2,2),(3,2),(4,2)}, eps_a=0.05): "
              "%d error-bound, %d length, %d remaining-fraction violations; max error/bound %.6f; "
              "halts: %d cap, %d no-eligible",
              g.runs, g.bound_violations, g.length_violations, g.remaining_violations, g.max_ratio,
              g.cap_hits, g.no_eligible)};
}

Outcome greedy_witness() {
  run_greedy();
  const auto& g = greedy;
  return {g.witness_violations == 0 && g.witness_checks > 0,
          fmt("%d runs, %d iterations checked, %d without a piece of coverage >= 1/(2s) and "
              "error <= 2 eps_hat |S|/|S_rem|",
              g.witness_runs, g.witness_checks, g.witness_violations)};
}

// ---------------------------------------------------------------------------
// 6. Robust lifting with the memorizing learner

Outcome robust_slope() {
  const std::vector<double> etas{0.0, 0.05, 0.10, 0.15};
  const int n = 8, d = 1, trials = 50;
  const double eps = 0.05;
  const auto a = memorizing(eps);

  // c: worst excess error per unit of corruption for the memorizer alone on
  // one leaf (uniform on a 2^(n-1) subcube), trained on its full support.
  double c = 0.0;
  {
    const Restriction leaf = Restriction::parse("+*******");
    const auto clean = LabeledDistribution::from_labeler(
        DensePMF::uniform_on(leaf), [](const Point& x) { return x[3]; });
    const auto m = a.m(n, eps);
    std::vector<double> base(etas.size());
    for (std::size_t e = 0; e < etas.size(); ++e) {
      const auto dirty = corrupt(clean, {etas[e], NoiseMode::LabelFlip, std::nullopt});
      std::vector<double> errs(trials);
      for (int t = 0; t < trials; ++t) {
        errs[t] = true_error(a(sample_counts(dirty, m, derive_seed(6, e * 1000 + t)), t), clean);
      }
      base[e] = mean(errs);
      if (etas[e] > 0) c = std::max(c, (base[e] - base[0]) / etas[e]);
    }
  }

  std::vector<double> lifted(etas.size());
  for (std::size_t e = 0; e < etas.size(); ++e) {
    std::vector<double> errs(trials);
    parallel_for(trials, [&](std::size_t t) {
      const std::uint64_t seed = derive_seed(derive_seed(6, "lift"), t);
      const auto planted = plant_random_tree(n, d, derive_seed(seed, "plant"));
      const auto clean = planted.labeled();
      const auto dirty = corrupt(clean, {etas[e], NoiseMode::WorstLeaf, planted.tree()});
      const auto train = sample_counts(dirty, LiftDtConfig::default_m_train(a, n, d, eps),
                                       derive_seed(seed, "train"));
      const auto test =
          sample_counts(dirty, LiftDtConfig::default_m_test(n, d, eps), derive_seed(seed, "test"));
      errs[t] = true_error(tree_learn(a, train, test, d, seed).hypothesis, clean);
    });
    lifted[e] = mean(errs);
  }
  // least-squares slope of mean lifted error against eta
  const double mx = mean(etas), my = mean(lifted);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t e = 0; e < etas.size(); ++e) {
    sxy += (etas[e] - mx) * (lifted[e] - my);
    sxx += (etas[e] - mx) * (etas[e] - mx);
  }
  const double slope = sxy / sxx;
  const double k = 2 * c + 2;
  bool ok = slope <= 1.2 * k;
  std::ostringstream os;
  for (std::size_t e = 0; e < etas.size(); ++e) {
    const double limit = k * etas[e] + 0.05;
    ok &= lifted[e] <= limit;
    os << fmt("eta=%.2f: %.4f <= %.4f; ", etas[e], lifted[e], limit);
  }
  return {ok, fmt("measured c=%.4f (2c+2=%.3f); ", c, k) + os.str() +
                  fmt("slope %.3f <= 1.2(2c+2)=%.3f", slope, 1.2 * k)};
}

// ---------------------------------------------------------------------------
// 7. TV distributes over tree leaves, exact rationals

Outcome tv_leaf_decomposition() {
  using boost::multiprecision::cpp_rational;
  Philox4x32 g(derive_seed(7, "tv"));
  const int triples = 1000;
  int violations = 0;
  std::function<DecisionTree(const Restriction&, int)> random_tree = [&](const Restriction& root,
                                                                         int depth) {
    std::vector<int> free;
    for (int i = 0; i < root.dim(); ++i) {
      if (root.is_free(i)) free.push_back(i);
    }
    if (depth == 0 || free.empty() || g.below(4) == 0) return DecisionTree::leaf();
    const int i = free[g.below(free.size())];
    return DecisionTree::split(i, random_tree(root.refine(i, kMinus), depth - 1),
                               random_tree(root.refine(i, kPlus), depth - 1));
  };
  for (int k = 0; k < triples; ++k) {
    const int n = 1 + static_cast<int>(g.below(10));
    const std::size_t cells = std::size_t{1} << n;
    auto random_masses = [&] {
      std::vector<cpp_rational> m(cells);
      cpp_rational total = 0;
      for (auto& v : m) {
        v = g.below(3) == 0 ? 0 : static_cast<long long>(g.below(1000));
        total += v;
      }
      if (total == 0) {
        m[0] = 1;
        total = 1;
      }
      for (auto& v : m) v /= total;
      return m;
    };
    const auto d1 = random_masses(), d2 = random_masses();
    const auto tree = random_tree(Restriction::all(n), 1 + static_cast<int>(g.below(4)));
    const auto rep = leaf_tv_decomposition<cpp_rational>(n, d1, d2, tree);
    violations += rep.weighted_sum > 2 * rep.total_tv;
  }
  return {violations == 0,
          fmt("%d random (D, D', T) at n<=10 in exact rationals, %d with sum reach*TV_leaf > 2 TV",
              triples, violations)};
}

// ---------------------------------------------------------------------------
// 8. Lower-bound certificate

Outcome lowerbound_certificate() {
  std::ostringstream os;
  bool ok = true;
  const std::uint64_t seeds = 1000;
  for (int n : {10, 12}) {
    const int d = default_lowerbound_depth(n);
    std::vector<char> bad(seeds, 0);
    parallel_for(seeds, [&](std::size_t i) {
      bad[i] = !count_concentration_check(draw_half_support(n, derive_seed(8 * n, i)), d).violations.empty();
    });
    const double frac = std::count(bad.begin(), bad.end(), 1) / static_cast<double>(seeds);
    ok &= frac <= 0.02;
    os << fmt("n=%d d=%d: violating fraction %.4f <= 0.02; ", n, d, frac);
  }
  int checked = 0, below = 0;
  double worst = 1.0;
  for (int n = 1; n <= 4; ++n) {
    for (int d = 0; d <= std::min(n, 2); ++d) {
      for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const auto s = draw_half_support(n, derive_seed(800 + 10 * n + d, seed));
        const auto cert = tv_lowerbound_certificate(count_concentration_check(s, d));
        if (!cert) continue;
        ++checked;
        const double tv = min_tv_to_decomposable(s, d, LeafModel::Constant).min_tv;
        worst = std::min(worst, tv);
        below += tv < *cert - 1e-12;
      }
    }
  }
  ok &= below == 0 && checked > 0;
  os << fmt("exhaustive n<=4 d<=2: %d certified supports, min TV %.4f, %d below 1/3", checked, worst,
            below);
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------
// 9. Collision regime

Outcome collision_regime() {
  const int n = 16;
  const std::uint64_t m = (1u << 8) / 20;
  const auto chi = collision_experiment(n, m, 10000, derive_seed(9, "chi2"), "chi2-prefix");
  const bool rates = chi.p_collision_uniform <= 0.01 + 5 * chi.sigma_uniform &&
                     chi.p_collision_half <= 0.01 + 5 * chi.sigma_half;
  const bool adv = std::abs(chi.advantage) <= 0.05;
  return {rates && adv,
          fmt("n=16 m=%llu, 10^4 trials: collision rate uniform %.4f, half-support %.4f "
              "(<= 0.01 + 5 sigma); chi2-prefix advantage %.4f <= 0.05",
              static_cast<unsigned long long>(m), chi.p_collision_uniform, chi.p_collision_half,
              chi.advantage)};
}

// ---------------------------------------------------------------------------
// 10. Booster with a sabotaged copy

Outcome booster() {
  const double eps = 0.1, delta = 0.1;
  const int n = 6, trials = 500;
  const auto cfg = BoostConfig::make(eps, delta);
  const auto dist = LabeledDistribution::from_labeler(
      DensePMF::uniform(n), [](const Point& x) { return x[2] > 0 || x[4] < 0 ? kPlus : kMinus; });
  const auto inner = lowdegree(1, eps);
  const std::uint64_t m = inner.m(n, eps);
  std::vector<char> good(trials, 0);
  std::vector<double> chosen_err(trials);
  parallel_for(trials, [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(10, t);
    BaseLearner a = inner;
    const std::uint64_t adversarial = derive_seed(seed, std::uint64_t{0});
    a.learn = [&, adversarial](const LabeledSample& s, std::uint64_t sd) {
      // copy 0 always fails; any other copy fails with probability 0.08
      if (sd == adversarial) return Hypothesis::majority(n, {{2, kMinus}});
      Philox4x32 coin(derive_seed(sd, "sabotage"));
      if (coin.unit() < 0.08) return Hypothesis::parity(n, 0b110011);
      return inner.learn(s, sd);
    };
    const auto source = sample(dist, cfg.required(m), derive_seed(seed, "source"));
    const auto r = dlift::boost(a, cfg, source, m, seed);
    chosen_err[t] = true_error(r.hypothesis, dist);
    good[t] = chosen_err[t] <= 2 * eps;
  });
  const int wins = static_cast<int>(std::count(good.begin(), good.end(), 1));
  return {wins >= (1 - delta) * trials,
          fmt("eps=0.1 delta=0.1, %d copies, validation %llu: %d/%d trials chose error <= 0.2 "
              "(need >= %d); mean chosen error %.4f",
              cfg.copies, static_cast<unsigned long long>(cfg.test_size), wins, trials,
              static_cast<int>(std::ceil((1 - delta) * trials)), mean(chosen_err))};
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double budget_seconds;  // 0: none stated
  };
  const std::vector<Entry> entries{
      {1, "FindTree exactness", findtree_exactness, 120},
      {2, "tree lifter end to end", dt_end_to_end, 600},
      {3, "training and FindTree call counts", call_counts, 0},
      {4, "greedy list error guarantee", greedy_guarantee, 0},
      {5, "greedy witness per iteration", greedy_witness, 0},
      {6, "robust lifting slope", robust_slope, 600},
      {7, "TV distributes over leaves", tv_leaf_decomposition, 0},
      {8, "lower-bound certificate", lowerbound_certificate, 900},
      {9, "collision regime", collision_regime, 0},
      {10, "booster selection", booster, 0},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& e : entries) {
    if (!wanted.empty() && !wanted.count(e.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = o.pass;
    std::string timing = fmt("%.1f s", secs);
    if (e.budget_seconds > 0) {
      pass &= secs < e.budget_seconds;
      timing += fmt(" < %.0f s", e.budget_seconds);
    }
    failed += !pass;
    std::printf("%s  %2d  %s: %s [%s]\n", pass ? "PASS" : "FAIL", e.id, e.name, o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%s: %d criteria failed\n", failed ? "FAILED" : "OK", failed);
  return failed ? 1 : 0;
}
