// dlift: command-line front end for the lifting experiments.
//
//   dlift gen-dist      plant a decomposition, optionally draw a sample
//   dlift lift-dt       run the decision-tree lifter
//   dlift lift-subcube  run the subcube-partition lifter
//   dlift noise-sweep   lifter under corruption, one result per eta
//   dlift sweep         any config field over a list of values
//   dlift lowerbound    count concentration, min TV and collision checks
//   dlift report        tables from existing result files
//
// Exit codes: 0 ok, 2 config/usage error, 3 invariant violation, 1 other.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dlift/errors.hpp"
#include "dlift/harness.hpp"
#include "dlift/learners.hpp"
#include "dlift/lowerbound.hpp"
#include "dlift/parallel.hpp"
#include "json.hpp"

using nlohmann::json;
using namespace dlift;

namespace {

struct PlantFlags {
  std::string planted;  // file path or inline JSON
  std::string generator = "random-tree";
  int n = 8;
  int d = 1;
  int s = 2;
  int width = 2;
  int count = 2;
  int split = 0;
  int lit = 1;
  std::string family = "uniform";
  std::optional<std::uint64_t> seed;
};

struct RunFlags {
  ExperimentConfig cfg;
  PlantFlags plant;
  std::string config_file;
  std::string out_dir;
  std::string noise_mode = "label-flip";
  double eta = 0.0;
  std::string table_format = "csv";
  std::string table_path;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

json planted_spec(const PlantFlags& p) {
  if (!p.planted.empty()) {
    const auto first = p.planted.find_first_not_of(" \t\n");
    if (first != std::string::npos && p.planted[first] == '{') {
      try {
        return json::parse(p.planted);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("--planted: ") + e.what());
      }
    }
    return read_json_file(p.planted);
  }
  json spec{{"generator", p.generator}, {"family", p.family}};
  if (p.generator == "tribes") {
    spec["width"] = p.width;
    spec["count"] = p.count;
  } else {
    spec["n"] = p.n;
    spec["d"] = p.d;
    if (p.generator == "random-partition") spec["s"] = p.s;
    if (p.generator == "xor-split") {
      spec["split"] = p.split;
      spec["lit"] = p.lit;
    }
  }
  if (p.seed) spec["seed"] = *p.seed;
  return spec;
}

void add_plant_flags(CLI::App* app, PlantFlags& p) {
  app->add_option("--planted", p.planted, "Planted descriptor: JSON file or inline JSON");
  app->add_option("--generator", p.generator, "random-tree | random-partition | tribes | xor-split");
  app->add_option("--n", p.n, "Dimension of the planted instance");
  app->add_option("--planted-d", p.d, "Depth of the planted tree or partition");
  app->add_option("--planted-s", p.s, "Pieces of a planted partition");
  app->add_option("--width", p.width, "Tribes block width");
  app->add_option("--count", p.count, "Tribes block count");
  app->add_option("--split", p.split, "xor-split: split coordinate");
  app->add_option("--lit", p.lit, "xor-split: target literal");
  app->add_option("--family", p.family, "uniform | product");
  app->add_option("--planted-seed", p.seed, "Fix the planted instance across trials");
}

void add_run_flags(CLI::App* app, RunFlags& f) {
  add_plant_flags(app, f.plant);
  auto& c = f.cfg;
  app->add_option("--config", f.config_file, "JSON config; its fields override flags");
  app->add_option("--scenario", c.scenario, "Scenario id used in file names");
  app->add_option("--learner", c.learner, "plurality | memorize | lowdegree-<k>");
  app->add_option("--d", c.d, "Lifter depth budget");
  app->add_option("--s", c.s, "Subcube lifter: partition size budget");
  app->add_option("--eps", c.eps, "Target error");
  app->add_option("--eps-additional", c.eps_additional, "Subcube lifter: additive slack");
  app->add_option("--m-train", c.m_train, "Training sample size (0 = default)");
  app->add_option("--m-test", c.m_test, "Test sample size (0 = default)");
  app->add_option("--trials", c.trials, "Number of seeded trials");
  app->add_option("--seed", c.master_seed, "Master seed");
  app->add_option("--noise-mode", f.noise_mode, "label-flip | point-replacement | worst-leaf");
  app->add_option("--eta", f.eta, "Corruption budget");
  app->add_option("--out", f.out_dir, "Output directory (default $DLIFT_OUT_DIR or results)");
  app->add_option("--format", f.table_format, "Table format: csv | json");
  app->add_option("--table", f.table_path, "Write the per-trial table here");
}

ExperimentConfig resolve_config(RunFlags& f, const std::string& lifter) {
  f.cfg.lifter = lifter;
  f.cfg.planted = planted_spec(f.plant);
  if (f.eta > 0.0) {
    NoiseModel nm;
    nm.eta = f.eta;
    nm.mode = noise_mode_from_string(f.noise_mode);
    f.cfg.noise = nm;
  } else if (f.noise_mode != "label-flip") {
    NoiseModel nm;
    nm.mode = noise_mode_from_string(f.noise_mode);
    f.cfg.noise = nm;
  }
  json j = f.cfg.to_json();
  if (!f.config_file.empty()) j.update(read_json_file(f.config_file));
  return ExperimentConfig::from_json(j);
}

std::filesystem::path out_dir(const RunFlags& f) {
  return f.out_dir.empty() ? default_output_dir() : std::filesystem::path(f.out_dir);
}

void finish(const std::vector<ExperimentResult>& results, const RunFlags& f) {
  const TableFormat fmt = table_format_from_string(f.table_format);
  for (const auto& r : results) std::cerr << "wrote " << write_result(r, out_dir(f)).string() << "\n";
  if (!f.table_path.empty()) {
    std::ofstream t(f.table_path);
    if (!t) throw ConfigError("cannot write " + f.table_path);
    emit_table(results, fmt, t);
  }
  emit_aggregates(results, fmt, std::cout);
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad value in list: " + item);
    }
  }
  if (out.empty()) throw ConfigError("empty value list");
  return out;
}

ExperimentResult result_from_json(const json& j) {
  ExperimentResult r;
  try {
    r.config = ExperimentConfig::from_json(j.at("config"));
    r.config_hash = j.at("config_hash").get<std::string>();
    if (r.config_hash != r.config.hash()) {
      throw ConfigError("config hash mismatch: " + r.config_hash + " vs " + r.config.hash());
    }
    r.planted = j.value("planted", json());
    std::vector<double> true_err, test_err;
    for (const auto& t : j.at("trials")) {
      TrialResult tr;
      tr.trial = t.at("trial").get<std::uint64_t>();
      tr.seed = t.at("seed").get<std::uint64_t>();
      tr.m_train = t.at("m_train").get<std::uint64_t>();
      tr.m_test = t.at("m_test").get<std::uint64_t>();
      tr.test_error = t.at("test_error").get<double>();
      tr.true_error = t.at("true_error").get<double>();
      tr.learner_calls = t.at("learner_calls").get<std::uint64_t>();
      tr.findtree_calls = t.value("findtree_calls", std::uint64_t{0});
      tr.list_length = t.value("list_length", std::uint64_t{0});
      tr.halt = t.value("halt", std::string());
      true_err.push_back(tr.true_error);
      test_err.push_back(tr.test_error);
      r.trials.push_back(std::move(tr));
    }
    if (r.trials.size() != r.config.trials) throw ConfigError("trial count does not match config");
    r.true_error = Aggregate::of(true_err);
    r.test_error = Aggregate::of(test_err);
    if (j.contains("sweep")) r.sweep = j.at("sweep");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed result file: ") + e.what());
  }
  return r;
}

int run(int argc, char** argv) {
  CLI::App app{"Distributional lifting experiments"};
  app.require_subcommand(1);

  // gen-dist
  PlantFlags gen;
  std::uint64_t gen_sample = 0, gen_seed = 0;
  std::string gen_out, gen_sample_out;
  auto* gen_cmd = app.add_subcommand("gen-dist", "Plant a decomposition and print its descriptor");
  add_plant_flags(gen_cmd, gen);
  gen_cmd->add_option("--out", gen_out, "Write the descriptor here instead of stdout");
  gen_cmd->add_option("--sample", gen_sample, "Also draw this many labeled examples");
  gen_cmd->add_option("--sample-seed", gen_seed, "Seed for --sample");
  gen_cmd->add_option("--sample-out", gen_sample_out, "CSV file for the sample (default stdout)");

  RunFlags dt_flags, sub_flags, noise_flags, sweep_flags;
  auto* dt_cmd = app.add_subcommand("lift-dt", "Decision-tree lifter");
  add_run_flags(dt_cmd, dt_flags);
  auto* sub_cmd = app.add_subcommand("lift-subcube", "Subcube-partition lifter");
  add_run_flags(sub_cmd, sub_flags);

  std::string noise_lifter = "dt", noise_etas = "0,0.05,0.1,0.15";
  auto* noise_cmd = app.add_subcommand("noise-sweep", "Lifted error against corruption budget");
  add_run_flags(noise_cmd, noise_flags);
  noise_cmd->add_option("--lifter", noise_lifter, "dt | subcube");
  noise_cmd->add_option("--etas", noise_etas, "Comma-separated corruption budgets");

  std::string sweep_lifter = "dt", sweep_axis, sweep_values;
  auto* sweep_cmd = app.add_subcommand("sweep", "One experiment per value of an axis");
  add_run_flags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--lifter", sweep_lifter, "dt | subcube");
  sweep_cmd->add_option("--axis", sweep_axis, "m_train | m_test | eta | d | s | eps | trials")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "Comma-separated values")->required();

  int lb_n = 10, lb_d = -1, lb_min_tv_d = -1;
  double lb_c = 3.0;
  std::uint64_t lb_seeds = 100, lb_seed = 0, lb_m = 0, lb_trials = 0;
  std::string lb_dist = "chi2-prefix", lb_out;
  bool lb_scan_c = false;
  auto* lb_cmd = app.add_subcommand("lowerbound", "Half-support lower-bound checks");
  lb_cmd->add_option("--n", lb_n, "Dimension");
  lb_cmd->add_option("--d", lb_d, "Depth (default n - ceil(c log2 n))");
  lb_cmd->add_option("--c", lb_c, "Constant in the default depth");
  lb_cmd->add_flag("--scan-c", lb_scan_c, "Report the smallest c in 0.25 steps with no violations");
  lb_cmd->add_option("--seeds", lb_seeds, "Number of half supports");
  lb_cmd->add_option("--seed", lb_seed, "Master seed");
  lb_cmd->add_option("--min-tv-depth", lb_min_tv_d, "Also run exhaustive min TV (n <= 5)");
  lb_cmd->add_option("--collision-m", lb_m, "Sample size for the collision experiment");
  lb_cmd->add_option("--collision-trials", lb_trials, "Trials for the collision experiment");
  lb_cmd->add_option("--distinguisher", lb_dist, "chi2-prefix | collision");
  lb_cmd->add_option("--out", lb_out, "Write the JSON report here instead of stdout");

  std::vector<std::string> report_files;
  std::string report_format = "csv", report_table;
  bool report_trials = false;
  auto* report_cmd = app.add_subcommand("report", "Tables from result files");
  report_cmd->add_option("files", report_files, "Result JSON files")->required();
  report_cmd->add_option("--format", report_format, "csv | json");
  report_cmd->add_flag("--trials", report_trials, "One row per trial instead of aggregates");
  report_cmd->add_option("--table", report_table, "Write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (gen_cmd->parsed()) {
    const PlantedDecomposition p = resolve_planted(planted_spec(gen), gen.seed.value_or(0));
    const std::string text = p.to_json().dump(2);
    if (gen_out.empty()) {
      std::cout << text << "\n";
    } else {
      std::ofstream(gen_out) << text << "\n";
    }
    if (gen_sample > 0) {
      const LabeledSample s = sample(p.labeled(), gen_sample, gen_seed);
      if (gen_sample_out.empty()) {
        s.write_csv(std::cout);
      } else {
        std::ofstream out(gen_sample_out);
        s.write_csv(out);
      }
    }
  } else if (dt_cmd->parsed()) {
    finish({run_experiment(resolve_config(dt_flags, "dt"))}, dt_flags);
  } else if (sub_cmd->parsed()) {
    finish({run_experiment(resolve_config(sub_flags, "subcube"))}, sub_flags);
  } else if (noise_cmd->parsed()) {
    if (noise_flags.eta == 0.0 && noise_flags.noise_mode == "label-flip") {
      noise_flags.noise_mode = "worst-leaf";
    }
    const ExperimentConfig base = resolve_config(noise_flags, noise_lifter);
    finish(sweep(base, "eta", parse_values(noise_etas)), noise_flags);
  } else if (sweep_cmd->parsed()) {
    const ExperimentConfig base = resolve_config(sweep_flags, sweep_lifter);
    finish(sweep(base, sweep_axis, parse_values(sweep_values)), sweep_flags);
  } else if (lb_cmd->parsed()) {
    if (lb_n < 1 || lb_n > kMaxDim) throw ConfigError("--n out of range");
    const int d = lb_d >= 0 ? lb_d : default_lowerbound_depth(lb_n, lb_c);
    std::vector<ConcentrationReport> reports(lb_seeds);
    parallel_for(lb_seeds, [&](std::size_t i) {
      reports[i] = count_concentration_check(draw_half_support(lb_n, derive_seed(lb_seed, i)), d);
    });
    std::uint64_t bad = 0;
    json violating = json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (!reports[i].violations.empty()) {
        ++bad;
        violating.push_back({{"seed_index", i}, {"violations", reports[i].violations.size()}});
      }
    }
    json out{{"n", lb_n},
             {"d", d},
             {"c", lb_c},
             {"seeds", lb_seeds},
             {"master_seed", lb_seed},
             {"restrictions_per_seed", reports.empty() ? 0 : reports[0].checked},
             {"violating_seeds", bad},
             {"violation_fraction", lb_seeds ? static_cast<double>(bad) / lb_seeds : 0.0},
             {"violating", violating}};
    if (lb_scan_c) {
      // Smallest c whose depth leaves every seed violation-free.
      json scan = json::array();
      std::optional<double> smallest;
      for (double c = 0.25; c <= 4.0 + 1e-9; c += 0.25) {
        const int dc = default_lowerbound_depth(lb_n, c);
        std::vector<char> ok(lb_seeds, 1);
        parallel_for(lb_seeds, [&](std::size_t i) {
          ok[i] = count_concentration_check(draw_half_support(lb_n, derive_seed(lb_seed, i)), dc)
                      .violations.empty();
        });
        const bool all_ok = std::all_of(ok.begin(), ok.end(), [](char v) { return v != 0; });
        scan.push_back({{"c", c}, {"d", dc}, {"violation_free", all_ok}});
        if (all_ok && !smallest) smallest = c;
      }
      out["c_scan"] = scan;
      out["smallest_c"] = smallest ? json(*smallest) : json(nullptr);
    }
    if (lb_min_tv_d >= 0) {
      json tv = json::array();
      for (std::size_t i = 0; i < std::min<std::uint64_t>(lb_seeds, 20); ++i) {
        const HalfSupport hs = draw_half_support(lb_n, derive_seed(lb_seed, i));
        const MinTvResult r = min_tv_to_decomposable(hs, lb_min_tv_d);
        const auto cert = tv_lowerbound_certificate(count_concentration_check(hs, lb_min_tv_d));
        tv.push_back({{"seed_index", i},
                      {"min_tv", r.min_tv},
                      {"certificate", cert ? json(*cert) : json(nullptr)},
                      {"tree", r.tree.to_json()}});
      }
      out["min_tv"] = tv;
    }
    if (lb_m > 0) {
      const CollisionReport c =
          collision_experiment(lb_n, lb_m, lb_trials ? lb_trials : 10000, lb_seed, lb_dist);
      out["collision"] = {{"m", c.m},
                          {"trials", c.trials},
                          {"p_collision_uniform", c.p_collision_uniform},
                          {"p_collision_half", c.p_collision_half},
                          {"sigma_uniform", c.sigma_uniform},
                          {"sigma_half", c.sigma_half},
                          {"bound_uniform", c.bound_uniform},
                          {"bound_half", c.bound_half},
                          {"within_bounds", c.within_bounds},
                          {"distinguisher", c.distinguisher},
                          {"accept_uniform", c.accept_uniform},
                          {"accept_half", c.accept_half},
                          {"advantage", c.advantage}};
    }
    if (lb_out.empty()) {
      std::cout << out.dump(2) << "\n";
    } else {
      std::ofstream(lb_out) << out.dump(2) << "\n";
    }
  } else if (report_cmd->parsed()) {
    std::vector<ExperimentResult> results;
    for (const auto& f : report_files) results.push_back(result_from_json(read_json_file(f)));
    const TableFormat fmt = table_format_from_string(report_format);
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!report_table.empty()) {
      file.open(report_table);
      if (!file) throw ConfigError("cannot write " + report_table);
      os = &file;
    }
    if (report_trials) {
      emit_table(results, fmt, *os);
    } else {
      emit_aggregates(results, fmt, *os);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
