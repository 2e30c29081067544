#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dlift/distributions.hpp"
#include "dlift/planted.hpp"
#include "json.hpp"

namespace dlift {

// One experiment: a planted decomposition, a base learner, a lifter and
// optional corruption, repeated over seeded trials.
//
// `planted` is either a full decomposition descriptor (as written by
// PlantedDecomposition::to_json) or a generator description:
//   {"generator": "random-tree", "n": 8, "d": 1}
//   {"generator": "random-partition", "n": 8, "s": 2, "d": 1}
//   {"generator": "tribes", "width": 2, "count": 2}
//   {"generator": "xor-split", "n": 8, "split": 0, "lit": 1}
// optionally with "seed" and "family" ("uniform" | "product"). A generator
// without a seed plants a fresh decomposition in every trial.
struct ExperimentConfig {
  std::string scenario = "experiment";
  nlohmann::json planted;
  std::string learner = "lowdegree-1";
  std::string lifter = "dt";  // dt | subcube
  int d = 1;
  int s = 2;
  double eps = 0.05;
  double eps_additional = 0.0;  // subcube only; 0 -> eps
  std::uint64_t m_train = 0;    // 0 -> lifter default
  std::uint64_t m_test = 0;     // 0 -> lifter default
  std::optional<NoiseModel> noise;
  std::uint64_t trials = 1;
  std::uint64_t master_seed = 0;

  nlohmann::json to_json() const;
  // Throws ConfigError on missing or malformed fields.
  static ExperimentConfig from_json(const nlohmann::json& j);
  // 16 hex digits of FNV-1a over the canonical JSON dump.
  std::string hash() const;
};

struct TrialResult {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::uint64_t m_train = 0;
  std::uint64_t m_test = 0;
  double test_error = 0.0;
  double true_error = 0.0;
  std::uint64_t learner_calls = 0;
  std::uint64_t findtree_calls = 0;  // dt only
  std::uint64_t list_length = 0;     // subcube only
  std::string halt;                  // subcube only
  double planted_test_error = 0.0;   // planted partition or tree with the learned map
  nlohmann::json hypothesis;         // tree or list with per-entry hypotheses
  nlohmann::json trace;              // subcube (r_i, l_i) trace
  double train_seconds = 0.0;        // kept out of the result file
  double total_seconds = 0.0;
};

struct Aggregate {
  double mean = 0.0, stddev = 0.0, min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
  static Aggregate of(std::vector<double> values);
  nlohmann::json to_json() const;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string config_hash;
  nlohmann::json planted;  // descriptor of the fixed planted decomposition, if any
  std::vector<TrialResult> trials;
  Aggregate true_error;
  Aggregate test_error;
  std::optional<nlohmann::json> sweep;  // {"id", "axis", "value"}

  // Deterministic content only (no timings).
  nlohmann::json to_json() const;
  nlohmann::json timings_json() const;
};

PlantedDecomposition resolve_planted(const nlohmann::json& spec, std::uint64_t fallback_seed);

// Runs all trials (concurrently, one derived seed per trial). Throws
// ConfigError for unknown learners or descriptors and InvariantViolation when
// a run breaks a checked invariant.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Supported axes: m_train, m_test, eta, d, s, eps, trials.
ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis, double value);
std::vector<ExperimentResult> sweep(const ExperimentConfig& base, const std::string& axis,
                                    const std::vector<double>& values);

enum class TableFormat { Csv, Json };
TableFormat table_format_from_string(const std::string& s);

// One row per trial. CSV columns, in order:
//   sweep_id, axis, value, config_hash, scenario, trial, seed, m_train, m_test,
//   test_error, true_error, learner_calls, findtree_calls, list_length, halt
void emit_table(const std::vector<ExperimentResult>& results, TableFormat format, std::ostream& out);
// One row per result: config_hash, scenario, axis, value, trials, then
// mean/std/min/q25/median/q75/max of true_error and test_error.
void emit_aggregates(const std::vector<ExperimentResult>& results, TableFormat format,
                     std::ostream& out);
std::vector<std::string> table_columns();

// DLIFT_OUT_DIR if set, else "results".
std::filesystem::path default_output_dir();
// Writes <dir>/<scenario>-<hash>.json plus a .timings.json sidecar; returns
// the result path.
std::filesystem::path write_result(const ExperimentResult& r, const std::filesystem::path& dir);

}  // namespace dlift
