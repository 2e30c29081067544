#include "dlift/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dlift/learners.hpp"
#include "dlift/lift_dt.hpp"
#include "dlift/lift_subcube.hpp"
#include "dlift/parallel.hpp"

namespace dlift {
namespace {

using nlohmann::json;

std::string hex16(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

PieceFamily family_of(const json& spec) {
  const std::string f = get_or<std::string>(spec, "family", "uniform");
  if (f == "uniform") return PieceFamily::Uniform;
  if (f == "product") return PieceFamily::Product;
  throw ConfigError("unknown piece family: " + f);
}

bool is_generator(const json& spec) { return spec.is_object() && spec.contains("generator"); }

json list_json(const SubcubeList& list, const HypothesisMap& h, const FindSubcubeResult& run) {
  json entries = json::array();
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    entries.push_back({{"restriction", list.entries[i].encode()},
                       {"hypothesis", h.at(list.entries[i]).to_json()},
                       {"r", run.trace[i].remaining},
                       {"l", run.trace[i].error}});
  }
  return {{"list", entries}, {"final_remaining", run.final_remaining}};
}

TrialResult run_trial(const ExperimentConfig& cfg, const std::optional<PlantedDecomposition>& fixed,
                      std::uint64_t t) {
  const auto start = std::chrono::steady_clock::now();
  TrialResult r;
  r.trial = t;
  r.seed = derive_seed(cfg.master_seed, t);
  const PlantedDecomposition planted =
      fixed ? *fixed : resolve_planted(cfg.planted, derive_seed(r.seed, "plant"));
  const int n = planted.dim();
  const LabeledDistribution clean = planted.labeled();
  LabeledDistribution data = clean;
  if (cfg.noise && cfg.noise->eta > 0.0) {
    NoiseModel noise = *cfg.noise;
    if (noise.mode == NoiseMode::WorstLeaf) {
      if (!planted.tree()) throw ConfigError("worst-leaf noise needs a tree decomposition");
      noise.tree = planted.tree();
    }
    data = corrupt(clean, noise);
  }

  if (cfg.lifter == "dt") {
    const BaseLearner a = make_learner(cfg.learner, cfg.eps);
    r.m_train = cfg.m_train ? cfg.m_train : LiftDtConfig::default_m_train(a, n, cfg.d, cfg.eps);
    r.m_test = cfg.m_test ? cfg.m_test : LiftDtConfig::default_m_test(n, cfg.d, cfg.eps);
    const LabeledSample train = sample_counts(data, r.m_train, derive_seed(r.seed, "train"));
    const LabeledSample test = sample_counts(data, r.m_test, derive_seed(r.seed, "test"));
    const TreeLearnResult res = tree_learn(a, train, test, cfg.d, derive_seed(r.seed, "learn"));
    if (res.training.learner_calls != count_restrictions(n, cfg.d)) {
      throw InvariantViolation("learner call count " + std::to_string(res.training.learner_calls) +
                               " != " + std::to_string(count_restrictions(n, cfg.d)));
    }
    if (res.search.invocations > findtree_call_bound(n, cfg.d)) {
      throw InvariantViolation("FindTree recursion count exceeds its bound");
    }
    r.test_error = res.test_error.value();
    r.true_error = true_error(res.hypothesis, clean);
    r.learner_calls = res.training.learner_calls;
    r.findtree_calls = res.search.invocations;
    r.train_seconds = res.training.seconds;
    r.hypothesis = res.hypothesis.to_json();
    if (planted.tree() && planted.tree()->depth() <= cfg.d) {
      const DecisionTree& truth = *planted.tree();
      const auto pred = [&](const Point& x) { return eval_tree_hypothesis(truth, res.map, x); };
      r.planted_test_error = empirical_error(pred, test);
      if (planted.tree()->depth() == cfg.d && res.test_error.value() > r.planted_test_error) {
        throw InvariantViolation("returned tree is worse than the planted tree on S_test");
      }
    }
  } else if (cfg.lifter == "subcube") {
    const BaseLearner a = make_learner(cfg.learner, cfg.eps);
    const double eps_a = cfg.eps_additional > 0.0 ? cfg.eps_additional : cfg.eps;
    r.m_train =
        cfg.m_train ? cfg.m_train : LiftSubcubeConfig::default_m_train(a, n, cfg.s, cfg.eps);
    r.m_test = cfg.m_test ? cfg.m_test : LiftSubcubeConfig::default_m_test(n, cfg.s, cfg.d, cfg.eps);
    const LabeledSample train = sample_counts(data, r.m_train, derive_seed(r.seed, "train"));
    const LabeledSample test = sample_counts(data, r.m_test, derive_seed(r.seed, "test"));
    PartitionLearnResult res;
    res.map = train_hypothesis_map(a, train, cfg.d, derive_seed(r.seed, "learn"), &res.training);
    res.search = find_subcube(test, res.map, eps_a, cfg.s);
    const FindSubcubeResult& run = res.search;
    if (std::abs(telescoped_error(run) - run.error.value()) > 1e-9) {
      throw InvariantViolation("list error does not match its telescoped trace");
    }
    if (run.trace.size() > run.cap) throw InvariantViolation("list longer than iteration cap");
    r.test_error = run.error.value();
    r.true_error = true_error(ListPredictor{run.list, res.map}, clean);
    r.learner_calls = res.training.learner_calls;
    r.list_length = run.list.size();
    r.halt = to_string(run.halt);
    r.train_seconds = res.training.seconds;
    r.hypothesis = list_json(run.list, res.map, run);
    r.trace = json::array();
    for (const auto& step : run.trace) {
      r.trace.push_back({{"restriction", step.rho.encode()},
                         {"r", step.remaining},
                         {"l", step.error},
                         {"covered", step.covered}});
    }
    const SubcubePartition p = planted.partition();
    const bool comparable =
        static_cast<int>(p.size()) <= cfg.s &&
        std::all_of(p.pieces.begin(), p.pieces.end(),
                    [&](const Restriction& rho) { return rho.depth() <= cfg.d; });
    if (comparable) {
      r.planted_test_error = empirical_error(PartitionPredictor{p, res.map}, test);
      if (r.test_error > greedy_error_bound(r.planted_test_error, eps_a) + 1e-12) {
        throw InvariantViolation("list error exceeds the greedy guarantee");
      }
    }
  } else {
    throw ConfigError("unknown lifter: " + cfg.lifter);
  }
  r.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace

json ExperimentConfig::to_json() const {
  json noise_json = nullptr;
  if (noise) noise_json = {{"eta", noise->eta}, {"mode", dlift::to_string(noise->mode)}};
  return {{"scenario", scenario},
          {"planted", planted},
          {"learner", learner},
          {"lifter", lifter},
          {"d", d},
          {"s", s},
          {"eps", eps},
          {"eps_additional", eps_additional},
          {"m_train", m_train},
          {"m_test", m_test},
          {"noise", noise_json},
          {"trials", trials},
          {"master_seed", master_seed}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.scenario = get_or<std::string>(j, "scenario", c.scenario);
  if (!j.contains("planted") || !j.at("planted").is_object()) {
    throw ConfigError("config needs a 'planted' object");
  }
  c.planted = j.at("planted");
  c.learner = get_or<std::string>(j, "learner", c.learner);
  c.lifter = get_or<std::string>(j, "lifter", c.lifter);
  c.d = get_or<int>(j, "d", c.d);
  c.s = get_or<int>(j, "s", c.s);
  c.eps = get_or<double>(j, "eps", c.eps);
  c.eps_additional = get_or<double>(j, "eps_additional", c.eps_additional);
  c.m_train = get_or<std::uint64_t>(j, "m_train", c.m_train);
  c.m_test = get_or<std::uint64_t>(j, "m_test", c.m_test);
  c.trials = get_or<std::uint64_t>(j, "trials", c.trials);
  c.master_seed = get_or<std::uint64_t>(j, "master_seed", c.master_seed);
  if (j.contains("noise") && !j.at("noise").is_null()) {
    const json& nj = j.at("noise");
    NoiseModel nm;
    nm.eta = get_or<double>(nj, "eta", 0.0);
    try {
      nm.mode = noise_mode_from_string(get_or<std::string>(nj, "mode", "label-flip"));
    } catch (const UsageError& e) {
      throw ConfigError(e.what());
    }
    if (!(nm.eta >= 0.0 && nm.eta <= 1.0)) throw ConfigError("noise eta must lie in [0,1]");
    c.noise = nm;
  }
  if (c.lifter != "dt" && c.lifter != "subcube") throw ConfigError("unknown lifter: " + c.lifter);
  if (c.d < 0 || c.s < 1) throw ConfigError("d must be >= 0 and s >= 1");
  if (!(c.eps > 0.0 && c.eps < 1.0)) throw ConfigError("eps must lie in (0,1)");
  if (c.trials == 0) throw ConfigError("trials must be positive");
  try {
    make_learner(c.learner, c.eps);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

std::string ExperimentConfig::hash() const { return hex16(fnv1a64(to_json().dump())); }

Aggregate Aggregate::of(std::vector<double> v) {
  Aggregate a;
  if (v.empty()) return a;
  std::sort(v.begin(), v.end());
  long double sum = 0.0L;
  for (double x : v) sum += x;
  a.mean = static_cast<double>(sum / v.size());
  long double ss = 0.0L;
  for (double x : v) ss += (x - a.mean) * (x - a.mean);
  a.stddev = v.size() > 1 ? std::sqrt(static_cast<double>(ss / (v.size() - 1))) : 0.0;
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  a.min = v.front();
  a.q25 = quantile(0.25);
  a.median = quantile(0.5);
  a.q75 = quantile(0.75);
  a.max = v.back();
  return a;
}

json Aggregate::to_json() const {
  return {{"mean", mean}, {"std", stddev}, {"min", min},  {"q25", q25},
          {"median", median}, {"q75", q75}, {"max", max}};
}

json ExperimentResult::to_json() const {
  json trials_json = json::array();
  for (const auto& t : trials) {
    json tj{{"trial", t.trial},
            {"seed", t.seed},
            {"m_train", t.m_train},
            {"m_test", t.m_test},
            {"test_error", t.test_error},
            {"true_error", t.true_error},
            {"learner_calls", t.learner_calls},
            {"planted_test_error", t.planted_test_error},
            {"hypothesis", t.hypothesis}};
    if (config.lifter == "dt") {
      tj["findtree_calls"] = t.findtree_calls;
    } else {
      tj["list_length"] = t.list_length;
      tj["halt"] = t.halt;
      tj["trace"] = t.trace;
    }
    trials_json.push_back(std::move(tj));
  }
  json out{{"config", config.to_json()},
           {"config_hash", config_hash},
           {"planted", planted},
           {"trials", trials_json},
           {"aggregates", {{"true_error", true_error.to_json()}, {"test_error", test_error.to_json()}}}};
  if (sweep) out["sweep"] = *sweep;
  return out;
}

json ExperimentResult::timings_json() const {
  json rows = json::array();
  for (const auto& t : trials) {
    rows.push_back({{"trial", t.trial}, {"train_seconds", t.train_seconds},
                    {"total_seconds", t.total_seconds}});
  }
  return {{"config_hash", config_hash}, {"trials", rows}};
}

PlantedDecomposition resolve_planted(const json& spec, std::uint64_t fallback_seed) {
  try {
    if (!is_generator(spec)) return PlantedDecomposition::from_json(spec);
    const std::string gen = spec.at("generator").get<std::string>();
    const std::uint64_t seed = get_or<std::uint64_t>(spec, "seed", fallback_seed);
    PlantOptions opts;
    opts.family = family_of(spec);
    opts.max_literals = get_or<int>(spec, "max_literals", opts.max_literals);
    opts.equal_weights = get_or<bool>(spec, "equal_weights", opts.equal_weights);
    if (gen == "random-tree") {
      return plant_random_tree(spec.at("n").get<int>(), spec.at("d").get<int>(), seed, opts);
    }
    if (gen == "random-partition") {
      return plant_random_partition(spec.at("n").get<int>(), spec.at("s").get<int>(),
                                    spec.at("d").get<int>(), seed, opts);
    }
    if (gen == "tribes") {
      return plant_tribes(spec.at("width").get<int>(), spec.at("count").get<int>(), seed);
    }
    if (gen == "xor-split") {
      return plant_xor_split(spec.at("n").get<int>(), get_or<int>(spec, "split", 0),
                             get_or<int>(spec, "lit", 1), get_or<double>(spec, "minus_weight", 0.5));
    }
    throw ConfigError("unknown generator: " + gen);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad planted descriptor: ") + e.what());
  } catch (const UsageError& e) {
    throw ConfigError(std::string("bad planted descriptor: ") + e.what());
  } catch (const ConstructionError& e) {
    throw ConfigError(std::string("bad planted descriptor: ") + e.what());
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult out;
  out.config = cfg;
  out.config_hash = cfg.hash();
  std::optional<PlantedDecomposition> fixed;
  if (!is_generator(cfg.planted) || cfg.planted.contains("seed")) {
    fixed = resolve_planted(cfg.planted, 0);
    out.planted = fixed->to_json();
  }
  make_learner(cfg.learner, cfg.eps);
  out.trials.resize(cfg.trials);
  parallel_for(cfg.trials, [&](std::size_t t) { out.trials[t] = run_trial(cfg, fixed, t); });
  std::vector<double> true_err, test_err;
  for (const auto& t : out.trials) {
    true_err.push_back(t.true_error);
    test_err.push_back(t.test_error);
  }
  out.true_error = Aggregate::of(true_err);
  out.test_error = Aggregate::of(test_err);
  return out;
}

ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis, double value) {
  ExperimentConfig c = base;
  auto as_count = [&](double v) {
    if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError(axis + " needs integer values");
    return static_cast<std::uint64_t>(v);
  };
  if (axis == "m_train") {
    c.m_train = as_count(value);
  } else if (axis == "m_test") {
    c.m_test = as_count(value);
  } else if (axis == "eta") {
    NoiseModel nm = base.noise.value_or(NoiseModel{});
    nm.eta = value;
    c.noise = nm;
  } else if (axis == "d") {
    c.d = static_cast<int>(as_count(value));
  } else if (axis == "s") {
    c.s = static_cast<int>(as_count(value));
  } else if (axis == "eps") {
    c.eps = value;
  } else if (axis == "trials") {
    c.trials = as_count(value);
  } else {
    throw ConfigError("unknown sweep axis: " + axis);
  }
  std::ostringstream name;
  name << base.scenario << "-" << axis << "=" << value;
  c.scenario = name.str();
  return c;
}

std::vector<ExperimentResult> sweep(const ExperimentConfig& base, const std::string& axis,
                                    const std::vector<double>& values) {
  const std::string id = hex16(fnv1a64(base.to_json().dump() + "|" + axis));
  std::vector<ExperimentResult> out;
  for (double v : values) {
    ExperimentResult r = run_experiment(apply_axis(base, axis, v));
    r.sweep = json{{"id", id}, {"axis", axis}, {"value", v}};
    out.push_back(std::move(r));
  }
  return out;
}

TableFormat table_format_from_string(const std::string& s) {
  if (s == "csv") return TableFormat::Csv;
  if (s == "json") return TableFormat::Json;
  throw ConfigError("unknown table format: " + s);
}

std::vector<std::string> table_columns() {
  return {"sweep_id", "axis",       "value",         "config_hash",    "scenario",
          "trial",    "seed",       "m_train",       "m_test",         "test_error",
          "true_error", "learner_calls", "findtree_calls", "list_length", "halt"};
}

void emit_table(const std::vector<ExperimentResult>& results, TableFormat format, std::ostream& out) {
  const auto cols = table_columns();
  json rows = json::array();
  if (format == TableFormat::Csv) {
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
  }
  for (const auto& r : results) {
    const std::string sweep_id = r.sweep ? r.sweep->at("id").get<std::string>() : "";
    const std::string axis = r.sweep ? r.sweep->at("axis").get<std::string>() : "";
    const std::string value = r.sweep ? fmt_double(r.sweep->at("value").get<double>()) : "";
    for (const auto& t : r.trials) {
      const std::vector<std::string> cells{sweep_id,
                                           axis,
                                           value,
                                           r.config_hash,
                                           r.config.scenario,
                                           std::to_string(t.trial),
                                           std::to_string(t.seed),
                                           std::to_string(t.m_train),
                                           std::to_string(t.m_test),
                                           fmt_double(t.test_error),
                                           fmt_double(t.true_error),
                                           std::to_string(t.learner_calls),
                                           std::to_string(t.findtree_calls),
                                           std::to_string(t.list_length),
                                           t.halt};
      if (format == TableFormat::Csv) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
          std::string cell = cells[i];
          if (cell.find_first_of(",\"\n") != std::string::npos) {
            std::string quoted = "\"";
            for (char ch : cell) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            cell = quoted + "\"";
          }
          out << (i ? "," : "") << cell;
        }
        out << "\n";
      } else {
        json row = json::object();
        for (std::size_t i = 0; i < cols.size(); ++i) row[cols[i]] = cells[i];
        rows.push_back(std::move(row));
      }
    }
  }
  if (format == TableFormat::Json) out << rows.dump(2) << "\n";
}

void emit_aggregates(const std::vector<ExperimentResult>& results, TableFormat format,
                     std::ostream& out) {
  const std::vector<std::string> stats{"mean", "std", "min", "q25", "median", "q75", "max"};
  std::vector<std::string> cols{"config_hash", "scenario", "axis", "value", "trials"};
  for (const char* metric : {"true_error", "test_error"}) {
    for (const auto& s : stats) cols.push_back(std::string(metric) + "_" + s);
  }
  json rows = json::array();
  if (format == TableFormat::Csv) {
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
  }
  for (const auto& r : results) {
    std::vector<std::string> cells{r.config_hash, r.config.scenario,
                                   r.sweep ? r.sweep->at("axis").get<std::string>() : "",
                                   r.sweep ? fmt_double(r.sweep->at("value").get<double>()) : "",
                                   std::to_string(r.trials.size())};
    for (const Aggregate* a : {&r.true_error, &r.test_error}) {
      for (double v : {a->mean, a->stddev, a->min, a->q25, a->median, a->q75, a->max}) {
        cells.push_back(fmt_double(v));
      }
    }
    if (format == TableFormat::Csv) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << "\n";
    } else {
      json row = json::object();
      for (std::size_t i = 0; i < cols.size(); ++i) row[cols[i]] = cells[i];
      rows.push_back(std::move(row));
    }
  }
  if (format == TableFormat::Json) out << rows.dump(2) << "\n";
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("DLIFT_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "results";
}

std::filesystem::path write_result(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string name = r.config.scenario;
  for (char& ch : name) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.' ||
          ch == '=')) {
      ch = '_';
    }
  }
  const std::filesystem::path path = dir / (name + "-" + r.config_hash + ".json");
  {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << r.to_json().dump(2) << "\n";
  }
  std::filesystem::path timing = path;
  timing.replace_extension(".timings.json");
  std::ofstream f(timing);
  f << r.timings_json().dump(2) << "\n";
  return path;
}

}  // namespace dlift
