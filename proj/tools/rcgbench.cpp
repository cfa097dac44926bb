// Command-line driver for the benchmark harness: runs the solver grid,
// computes performance profiles, and renders reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rcg/bench.hpp"

namespace {

using rcg::ProblemKind;
using rcg::SolverSpec;
using rcg::StepStrategy;

struct Settings {
  std::string problems = "rayleigh,brockett,completion,offdiag";
  std::string solvers = "FR,DY,PRP,HS,HZ,Hybrid1,Hybrid2";
  int reps = 100;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  int max_iters = 5000;
  double c1 = 1e-4;
  double c2 = 0.9;
  double mu = 2.0;
  std::string linesearch = "both";
  std::string out = "bench_out";
  std::string in = "bench_out/records.jsonl";
  std::string metric = "iterations";
  std::string fallback = "auto";
  double sw_alpha_hi = 64.0;
  int threads = 1;
};

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// Config file values act as defaults; explicit flags overwrite them because
// the options below bind directly to the settings struct.
void apply_config(Settings& s, const std::string& path) {
  const nlohmann::json doc = nlohmann::json::parse(read_file(path));
  const auto get = [&doc](const char* key, auto& field) {
    if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("problems", s.problems);
  get("solvers", s.solvers);
  get("reps", s.reps);
  get("seed", s.seed);
  get("tol", s.tol);
  get("max-iters", s.max_iters);
  get("c1", s.c1);
  get("c2", s.c2);
  get("mu", s.mu);
  get("linesearch", s.linesearch);
  get("out", s.out);
  get("in", s.in);
  get("metric", s.metric);
  get("fallback", s.fallback);
  get("sw-alpha-hi", s.sw_alpha_hi);
  get("threads", s.threads);
}

rcg::SuiteConfig build_suite(const Settings& s) {
  rcg::SuiteConfig cfg;
  cfg.kinds.clear();
  for (const std::string& name : split_list(s.problems))
    cfg.kinds.push_back(rcg::problem_kind_from_string(name));
  if (cfg.kinds.empty()) throw std::runtime_error("no problems selected");

  std::vector<StepStrategy> strategies;
  if (s.linesearch == "both")
    strategies = {StepStrategy::Backtracking, StepStrategy::StrongWolfe};
  else
    strategies = {rcg::step_strategy_from_string(s.linesearch)};

  cfg.solvers.clear();
  for (const std::string& token : split_list(s.solvers)) {
    if (token.find('+') != std::string::npos) {
      SolverSpec spec = rcg::solver_spec_from_string(token);
      spec.rule.mu = s.mu;
      cfg.solvers.push_back(spec);
      continue;
    }
    for (StepStrategy strategy : strategies) {
      SolverSpec spec;
      spec.rule = rcg::beta_rule_from_string(token);
      spec.rule.mu = s.mu;
      spec.strategy = strategy;
      cfg.solvers.push_back(spec);
    }
  }
  if (cfg.solvers.empty()) throw std::runtime_error("no solvers selected");

  cfg.reps = s.reps;
  cfg.seed = s.seed;
  cfg.tol = s.tol;
  cfg.max_iters = s.max_iters;
  cfg.linesearch.c1 = s.c1;
  cfg.linesearch.c2 = s.c2;
  cfg.strong_wolfe_alpha_hi = s.sw_alpha_hi;
  cfg.threads = s.threads;
  if (s.fallback == "auto")
    cfg.fallback = rcg::FallbackMode::Auto;
  else if (s.fallback == "on")
    cfg.fallback = rcg::FallbackMode::On;
  else if (s.fallback == "off")
    cfg.fallback = rcg::FallbackMode::Off;
  else
    throw std::runtime_error("fallback must be auto, on, or off");
  return cfg;
}

int do_run(const Settings& s) {
  const rcg::SuiteConfig cfg = build_suite(s);
  const std::vector<rcg::RunRecord> records = rcg::run_suite(cfg);
  std::filesystem::create_directories(s.out);
  write_file(std::filesystem::path(s.out) / "records.jsonl", rcg::records_to_jsonl(records));
  write_file(std::filesystem::path(s.out) / "records.csv", rcg::records_to_csv(records));
  std::size_t converged = 0;
  for (const auto& r : records)
    if (r.status == rcg::SolveStatus::Converged) ++converged;
  std::printf("ran %zu solves (%zu converged); records written to %s\n", records.size(), converged,
              s.out.c_str());
  return 0;
}

int do_profile(const Settings& s) {
  const auto records = rcg::records_from_jsonl(read_file(s.in));
  const rcg::ProfileMetric metric = rcg::profile_metric_from_string(s.metric);
  const auto curves = rcg::performance_profile(records, metric);
  std::filesystem::create_directories(s.out);
  const std::filesystem::path path =
      std::filesystem::path(s.out) / ("profile_" + s.metric + ".csv");
  write_file(path, rcg::profile_to_csv(curves));
  std::printf("profile (%s) for %zu solvers written to %s\n", s.metric.c_str(), curves.size(),
              path.string().c_str());
  return 0;
}

int do_report(const Settings& s) {
  const auto records = rcg::records_from_jsonl(read_file(s.in));
  for (rcg::ProfileMetric metric : {rcg::ProfileMetric::Iterations, rcg::ProfileMetric::WallTime,
                                    rcg::ProfileMetric::CostEvals}) {
    const auto curves = rcg::performance_profile(records, metric);
    rcg::emit_report(curves, records, s.out, metric);
  }
  std::printf("report written to %s\n", s.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;

  // Pull --config out first so its values act as defaults.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    try {
      if (arg == "--config" && i + 1 < argc)
        apply_config(s, argv[i + 1]);
      else if (arg.rfind("--config=", 0) == 0)
        apply_config(s, arg.substr(9));
    } catch (const std::exception& e) {
      std::cerr << "error reading config: " << e.what() << "\n";
      return 1;
    }
  }

  CLI::App app{"Riemannian conjugate gradient benchmark harness"};
  app.require_subcommand(1);
  std::string config_path;  // consumed above; declared so CLI11 accepts it
  app.add_option("--config", config_path, "JSON config file mirroring the flags (flags win)");

  CLI::App* run_cmd = app.add_subcommand("run", "run a (problems x solvers) suite");
  run_cmd->add_option("--config", config_path, "JSON config file mirroring the flags (flags win)");
  run_cmd->add_option("--problems", s.problems, "comma list: rayleigh,brockett,completion,offdiag")
      ->capture_default_str();
  run_cmd->add_option("--solvers", s.solvers, "comma list of rules (FR,...,SD) or RULE+bt/sw specs")
      ->capture_default_str();
  run_cmd->add_option("--reps", s.reps, "repetitions per problem kind")->capture_default_str();
  run_cmd->add_option("--seed", s.seed, "suite seed")->capture_default_str();
  run_cmd->add_option("--tol", s.tol, "gradient-norm stopping tolerance")->capture_default_str();
  run_cmd->add_option("--max-iters", s.max_iters, "iteration cap per run")->capture_default_str();
  run_cmd->add_option("--c1", s.c1, "Armijo constant")->capture_default_str();
  run_cmd->add_option("--c2", s.c2, "curvature constant")->capture_default_str();
  run_cmd->add_option("--mu", s.mu, "HZ/SD modifier weight")->capture_default_str();
  run_cmd->add_option("--linesearch", s.linesearch, "backtracking, strong_wolfe, or both")
      ->capture_default_str();
  run_cmd->add_option("--out", s.out, "output directory")->capture_default_str();
  run_cmd->add_option("--fallback", s.fallback, "steepest-descent reset: auto, on, off")
      ->capture_default_str();
  run_cmd->add_option("--sw-alpha-hi", s.sw_alpha_hi, "step cap for the bracketing search")
      ->capture_default_str();
  run_cmd->add_option("--threads", s.threads, "parallel workers")->capture_default_str();

  CLI::App* profile_cmd = app.add_subcommand("profile", "compute a performance profile");
  profile_cmd->add_option("--config", config_path, "JSON config file mirroring the flags (flags win)");
  profile_cmd->add_option("--metric", s.metric, "iterations, wall_time, or cost_evals")
      ->capture_default_str();
  profile_cmd->add_option("--in", s.in, "records.jsonl produced by run")->capture_default_str();
  profile_cmd->add_option("--out", s.out, "output directory")->capture_default_str();

  CLI::App* report_cmd = app.add_subcommand("report", "emit csv + svg report for all metrics");
  report_cmd->add_option("--config", config_path, "JSON config file mirroring the flags (flags win)");
  report_cmd->add_option("--in", s.in, "records.jsonl produced by run")->capture_default_str();
  report_cmd->add_option("--out", s.out, "output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return do_run(s);
    if (profile_cmd->parsed()) return do_profile(s);
    if (report_cmd->parsed()) return do_report(s);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
