#include "rcg/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace rcg {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string SolverSpec::id() const { return rule.name() + "+" + to_string(strategy); }

SolverSpec solver_spec_from_string(const std::string& id) {
  const auto pos = id.find('+');
  if (pos == std::string::npos)
    throw std::invalid_argument("solver spec must look like RULE+STRATEGY: " + id);
  SolverSpec spec;
  spec.rule = beta_rule_from_string(id.substr(0, pos));
  spec.strategy = step_strategy_from_string(id.substr(pos + 1));
  return spec;
}

std::vector<SolverSpec> default_solver_grid() {
  std::vector<SolverSpec> grid;
  for (BetaVariant variant : {BetaVariant::FR, BetaVariant::DY, BetaVariant::PRP, BetaVariant::HS,
                              BetaVariant::HZ, BetaVariant::Hybrid1, BetaVariant::Hybrid2}) {
    for (StepStrategy strategy : {StepStrategy::Backtracking, StepStrategy::StrongWolfe}) {
      SolverSpec spec;
      spec.rule.variant = variant;
      spec.strategy = strategy;
      grid.push_back(spec);
    }
  }
  return grid;
}

const char* to_string(ProfileMetric metric) {
  switch (metric) {
    case ProfileMetric::Iterations:
      return "iterations";
    case ProfileMetric::WallTime:
      return "wall_time";
    case ProfileMetric::CostEvals:
      return "cost_evals";
  }
  return "?";
}

ProfileMetric profile_metric_from_string(const std::string& name) {
  if (name == "iterations") return ProfileMetric::Iterations;
  if (name == "wall_time") return ProfileMetric::WallTime;
  if (name == "cost_evals") return ProfileMetric::CostEvals;
  throw std::invalid_argument("unknown profile metric: " + name);
}

std::vector<RunRecord> run_suite(const SuiteConfig& cfg) {
  if (cfg.reps < 1) throw std::invalid_argument("run_suite: reps must be positive");
  const std::vector<SolverSpec> solvers =
      cfg.solvers.empty() ? default_solver_grid() : cfg.solvers;
  if (solvers.empty()) throw std::invalid_argument("run_suite: no solvers");

  struct ProblemCell {
    ProblemKind kind;
    int rep;
    std::uint64_t instance_seed;
    Objective objective;
    Point x0;
  };
  std::vector<ProblemCell> problems;
  problems.reserve(cfg.kinds.size() * static_cast<std::size_t>(cfg.reps));
  for (std::size_t ki = 0; ki < cfg.kinds.size(); ++ki) {
    for (int rep = 0; rep < cfg.reps; ++rep) {
      const std::uint64_t iseed =
          mix_seed(cfg.seed, (static_cast<std::uint64_t>(ki) << 32) + static_cast<std::uint64_t>(rep));
      const ObjectiveInstance inst = make_instance(cfg.kinds[ki], iseed, cfg.dims);
      ProblemCell cell{cfg.kinds[ki], rep, iseed, make_objective(inst),
                       inst.manifold.random_point(mix_seed(iseed, 0x0b90ull))};
      problems.push_back(std::move(cell));
    }
  }

  std::vector<SolverConfig> solver_cfgs;
  solver_cfgs.reserve(solvers.size());
  for (const SolverSpec& spec : solvers) {
    SolverConfig sc;
    sc.beta_rule = spec.rule;
    sc.strategy = spec.strategy;
    sc.tol = cfg.tol;
    sc.max_iters = cfg.max_iters;
    sc.linesearch = cfg.linesearch;
    if (spec.strategy == StepStrategy::StrongWolfe) {
      sc.linesearch.alpha_hi = cfg.strong_wolfe_alpha_hi;
      sc.linesearch.alpha0 = std::min(sc.linesearch.alpha0, sc.linesearch.alpha_hi);
      sc.wolfe_degrade_to_armijo = cfg.wolfe_degrade;
    }
    switch (cfg.fallback) {
      case FallbackMode::On:
        sc.descent_fallback = true;
        break;
      case FallbackMode::Off:
        sc.descent_fallback = false;
        break;
      case FallbackMode::Auto: {
        const BetaVariant v = spec.rule.variant;
        if (v == BetaVariant::PRP || v == BetaVariant::HS) {
          sc.descent_fallback = true;
        } else if (spec.strategy == StepStrategy::StrongWolfe &&
                   (v == BetaVariant::FR || v == BetaVariant::Hybrid2)) {
          sc.descent_fallback = sc.linesearch.c2 >= 0.5;  // theorem needs c2 < 1/2
        } else {
          sc.descent_fallback = false;
        }
        break;
      }
    }
    solver_cfgs.push_back(sc);
  }

  const std::size_t total = problems.size() * solvers.size();
  std::vector<RunRecord> records(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t job = next.fetch_add(1);
      if (job >= total) return;
      const std::size_t pi = job / solvers.size();
      const std::size_t si = job % solvers.size();
      const ProblemCell& cell = problems[pi];
      SolverConfig sc = solver_cfgs[si];
      sc.rng_seed = mix_seed(cell.instance_seed, si);
      const Trace tr = solve(cell.objective, cell.x0, sc);
      RunRecord& rec = records[job];
      rec.problem_id = to_string(cell.kind);
      rec.instance_seed = cell.instance_seed;
      rec.rep = cell.rep;
      rec.solver_id = solvers[si].id();
      rec.iterations = tr.iterations;
      rec.wall_time = tr.wall_time_sec;
      rec.cost_evals = tr.cost_evals;
      rec.grad_evals = tr.grad_evals;
      rec.final_grad_norm = tr.final_grad_norm;
      rec.status = tr.status;
    }
  };
  const int nthreads = std::max(1, cfg.threads);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return records;
}

std::vector<ProfileCurve> performance_profile(const std::vector<RunRecord>& records,
                                              ProfileMetric metric) {
  if (records.empty()) throw std::invalid_argument("performance_profile: empty record set");

  const auto metric_value = [metric](const RunRecord& r) -> double {
    switch (metric) {
      case ProfileMetric::Iterations:
        return static_cast<double>(r.iterations);
      case ProfileMetric::WallTime:
        return r.wall_time;
      case ProfileMetric::CostEvals:
        return static_cast<double>(r.cost_evals + r.grad_evals);
    }
    return 0.0;
  };

  // Problems and solvers keep their order of first appearance.
  std::vector<std::string> problem_keys;
  std::vector<std::string> solver_ids;
  std::map<std::string, std::size_t> problem_index;
  std::map<std::string, std::size_t> solver_index;
  for (const RunRecord& r : records) {
    const std::string pkey = r.problem_id + "#" + std::to_string(r.rep) + "#" +
                             std::to_string(r.instance_seed);
    if (problem_index.emplace(pkey, problem_keys.size()).second) problem_keys.push_back(pkey);
    if (solver_index.emplace(r.solver_id, solver_ids.size()).second)
      solver_ids.push_back(r.solver_id);
  }

  const std::size_t np = problem_keys.size();
  const std::size_t ns = solver_ids.size();
  std::vector<std::vector<double>> t(np, std::vector<double>(ns, kInf));
  for (const RunRecord& r : records) {
    const std::string pkey = r.problem_id + "#" + std::to_string(r.rep) + "#" +
                             std::to_string(r.instance_seed);
    const std::size_t pi = problem_index.at(pkey);
    const std::size_t si = solver_index.at(r.solver_id);
    t[pi][si] = r.status == SolveStatus::Converged ? metric_value(r) : kInf;
  }

  std::vector<std::vector<double>> ratio(ns);
  for (std::size_t pi = 0; pi < np; ++pi) {
    double tmin = kInf;
    for (std::size_t si = 0; si < ns; ++si) tmin = std::min(tmin, t[pi][si]);
    for (std::size_t si = 0; si < ns; ++si) {
      const double tv = t[pi][si];
      double r = kInf;
      if (std::isfinite(tv)) {
        if (tmin > 0.0)
          r = tv / tmin;
        else
          r = tv == 0.0 ? 1.0 : kInf;  // zero-cost winners tie at ratio 1
      }
      ratio[si].push_back(r);
    }
  }

  std::vector<ProfileCurve> curves(ns);
  for (std::size_t si = 0; si < ns; ++si) {
    ProfileCurve& curve = curves[si];
    curve.solver_id = solver_ids[si];
    std::vector<double> finite;
    for (double r : ratio[si])
      if (std::isfinite(r)) finite.push_back(r);
    std::sort(finite.begin(), finite.end());
    curve.solved_fraction = static_cast<double>(finite.size()) / static_cast<double>(np);
    if (finite.empty() || finite.front() > 1.0) curve.points.emplace_back(1.0, 0.0);
    std::size_t covered = 0;
    while (covered < finite.size()) {
      const double tau = finite[covered];
      std::size_t upto = covered;
      while (upto < finite.size() && finite[upto] == tau) ++upto;
      curve.points.emplace_back(tau, static_cast<double>(upto) / static_cast<double>(np));
      covered = upto;
    }
  }
  return curves;
}

std::string records_to_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "problem_id,instance_seed,rep,solver_id,iterations,wall_time,cost_evals,grad_evals,"
         "final_grad_norm,status\n";
  for (const RunRecord& r : records) {
    out << r.problem_id << ',' << r.instance_seed << ',' << r.rep << ',' << r.solver_id << ','
        << r.iterations << ',' << fmt_double(r.wall_time) << ',' << r.cost_evals << ','
        << r.grad_evals << ',' << fmt_double(r.final_grad_norm) << ',' << to_string(r.status)
        << '\n';
  }
  return out.str();
}

std::vector<RunRecord> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("records csv: empty input");
  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 10) throw std::invalid_argument("records csv: malformed line: " + line);
    RunRecord r;
    r.problem_id = f[0];
    r.instance_seed = std::stoull(f[1]);
    r.rep = std::stoi(f[2]);
    r.solver_id = f[3];
    r.iterations = std::stoi(f[4]);
    r.wall_time = std::stod(f[5]);
    r.cost_evals = std::stol(f[6]);
    r.grad_evals = std::stol(f[7]);
    r.final_grad_norm = std::stod(f[8]);
    r.status = solve_status_from_string(f[9]);
    records.push_back(std::move(r));
  }
  return records;
}

std::string records_to_jsonl(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  for (const RunRecord& r : records) {
    json j;
    j["problem_id"] = r.problem_id;
    j["instance_seed"] = r.instance_seed;
    j["rep"] = r.rep;
    j["solver_id"] = r.solver_id;
    j["iterations"] = r.iterations;
    j["wall_time"] = r.wall_time;
    j["cost_evals"] = r.cost_evals;
    j["grad_evals"] = r.grad_evals;
    j["final_grad_norm"] = r.final_grad_norm;
    j["status"] = to_string(r.status);
    out << j.dump() << "\n";
  }
  return out.str();
}

std::vector<RunRecord> records_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    RunRecord r;
    r.problem_id = j.at("problem_id").get<std::string>();
    r.instance_seed = j.at("instance_seed").get<std::uint64_t>();
    r.rep = j.at("rep").get<int>();
    r.solver_id = j.at("solver_id").get<std::string>();
    r.iterations = j.at("iterations").get<int>();
    r.wall_time = j.at("wall_time").get<double>();
    r.cost_evals = j.at("cost_evals").get<long>();
    r.grad_evals = j.at("grad_evals").get<long>();
    r.final_grad_norm = j.at("final_grad_norm").get<double>();
    r.status = solve_status_from_string(j.at("status").get<std::string>());
    records.push_back(std::move(r));
  }
  return records;
}

std::string profile_to_csv(const std::vector<ProfileCurve>& curves) {
  std::ostringstream out;
  out << "solver_id,tau,p\n";
  for (const ProfileCurve& c : curves)
    for (const auto& [tau, p] : c.points)
      out << c.solver_id << ',' << fmt_double(tau) << ',' << fmt_double(p) << '\n';
  return out.str();
}

std::vector<ProfileCurve> profile_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("profile csv: empty input");
  std::vector<ProfileCurve> curves;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 3) throw std::invalid_argument("profile csv: malformed line: " + line);
    if (curves.empty() || curves.back().solver_id != f[0]) {
      curves.push_back(ProfileCurve{});
      curves.back().solver_id = f[0];
    }
    curves.back().points.emplace_back(std::stod(f[1]), std::stod(f[2]));
  }
  for (ProfileCurve& c : curves)
    c.solved_fraction = c.points.empty() ? 0.0 : c.points.back().second;
  return curves;
}

std::string profile_to_svg(const std::vector<ProfileCurve>& curves, const std::string& title) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
                                  "#aec7e8", "#ffbb78", "#98df8a", "#ff9896"};
  const double width = 760, height = 480;
  const double left = 70, right = 200, top = 40, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double tau_max = 2.0;
  for (const ProfileCurve& c : curves)
    for (const auto& [tau, p] : c.points) tau_max = std::max(tau_max, tau);
  const double lmax = std::log10(tau_max) * 1.02;

  const auto xpos = [&](double tau) { return left + plot_w * std::log10(std::max(tau, 1.0)) / lmax; };
  const auto ypos = [&](double p) { return top + plot_h * (1.0 - p); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">"
      << title << "</text>\n";

  // Axes and gridlines.
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  for (double p = 0.0; p <= 1.0001; p += 0.25) {
    svg << "<line x1=\"" << left << "\" y1=\"" << ypos(p) << "\" x2=\"" << left + plot_w
        << "\" y2=\"" << ypos(p) << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << ypos(p) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << p
        << "</text>\n";
  }
  for (double tau = 1.0; tau <= tau_max * 1.0001; tau *= 2.0) {
    svg << "<line x1=\"" << xpos(tau) << "\" y1=\"" << top << "\" x2=\"" << xpos(tau) << "\" y2=\""
        << top + plot_h << "\" stroke=\"#eeeeee\"/>\n";
    svg << "<text x=\"" << xpos(tau) << "\" y=\"" << top + plot_h + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tau
        << "</text>\n";
  }
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">tau (log scale)"
      << "</text>\n";

  // One step polyline per solver.
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const ProfileCurve& c = curves[ci];
    const char* color = palette[ci % (sizeof(palette) / sizeof(palette[0]))];
    std::ostringstream pts;
    double prev_p = 0.0;
    bool first = true;
    for (const auto& [tau, p] : c.points) {
      if (first) {
        pts << xpos(tau) << ',' << ypos(p) << ' ';
        first = false;
      } else {
        pts << xpos(tau) << ',' << ypos(prev_p) << ' ';
        pts << xpos(tau) << ',' << ypos(p) << ' ';
      }
      prev_p = p;
    }
    pts << left + plot_w << ',' << ypos(prev_p);
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\""
        << pts.str() << "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(ci);
    svg << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly + 6 << "\" x2=\""
        << left + plot_w + 34 << "\" y2=\"" << ly + 6 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + plot_w + 40 << "\" y=\"" << ly + 10
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << c.solver_id << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_report: cannot open " + path.string());
  out << content;
  if (!out) throw std::runtime_error("emit_report: write failed for " + path.string());
}

}  // namespace

void emit_report(const std::vector<ProfileCurve>& curves, const std::vector<RunRecord>& records,
                 const std::filesystem::path& out_dir, ProfileMetric metric) {
  if (curves.empty()) throw std::invalid_argument("emit_report: no curves to render");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("emit_report: cannot create " + out_dir.string());
  const std::string tag = to_string(metric);
  write_file(out_dir / "records.csv", records_to_csv(records));
  write_file(out_dir / "records.jsonl", records_to_jsonl(records));
  write_file(out_dir / ("profile_" + tag + ".csv"), profile_to_csv(curves));
  write_file(out_dir / ("profile_" + tag + ".svg"),
             profile_to_svg(curves, "Performance profile (" + tag + ")"));
}

}  // namespace rcg
