#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rcg/cg.hpp"
#include "rcg/objectives.hpp"

namespace rcg {

struct SolverSpec {
  BetaRule rule{};
  StepStrategy strategy = StepStrategy::StrongWolfe;
  std::string id() const;  // e.g. "HZ+sw"
};

SolverSpec solver_spec_from_string(const std::string& id);

/// The benchmark grid: the seven classic rules under both line searches.
std::vector<SolverSpec> default_solver_grid();

/// Steepest-descent reset policy across the grid. Auto keeps the reset on
/// for PRP and HS (no descent theory at all), keeps the plain backtracking
/// pairings bare otherwise (how well each rule tolerates Armijo-only steps
/// is part of what the suite measures), and under the bracketing search
/// protects exactly the rules whose sufficient-descent theorem does not
/// cover the configured c2: FR and the FR/PRP hybrid need c2 < 1/2, which
/// the experiment default c2 = 0.9 violates. The reference toolbox these
/// experiments descend from applies the same reset unconditionally.
enum class FallbackMode { Auto, On, Off };

/// Suite preset: zoom with quadratic interpolation, the choice the reference
/// scalar searches make. Near the stopping tolerance it finds narrow
/// curvature windows that bisection walks past.
inline LineSearchConfig default_suite_linesearch() {
  LineSearchConfig ls;
  ls.interpolation = Interpolation::Quadratic;
  return ls;
}

struct SuiteConfig {
  std::vector<ProblemKind> kinds = {ProblemKind::Rayleigh, ProblemKind::Brockett,
                                    ProblemKind::Completion, ProblemKind::OffDiag};
  int reps = 100;
  std::uint64_t seed = 0;
  std::vector<SolverSpec> solvers;  // empty selects default_solver_grid()
  double tol = 1e-6;
  int max_iters = 5000;
  LineSearchConfig linesearch = default_suite_linesearch();
  /// Step-size cap for the bracketing search. The growth step needs headroom
  /// above alpha0, so suite runs widen the backtracking-oriented default.
  double strong_wolfe_alpha_hi = 64.0;
  /// Retry with plain Armijo when a strong-Wolfe search fails (see
  /// SolverConfig::wolfe_degrade_to_armijo).
  bool wolfe_degrade = true;
  FallbackMode fallback = FallbackMode::Auto;
  ProblemDims dims{};
  int threads = 1;
};

struct RunRecord {
  std::string problem_id;
  std::uint64_t instance_seed = 0;
  int rep = 0;
  std::string solver_id;
  int iterations = 0;
  double wall_time = 0.0;
  long cost_evals = 0;
  long grad_evals = 0;
  double final_grad_norm = 0.0;
  SolveStatus status = SolveStatus::MaxIters;
};

/// Runs the full (problem x repetition) x solver grid. Every cell yields
/// exactly one record; failed runs are recorded, never dropped. Instances
/// and starting points are shared across solvers and deterministic in the
/// suite seed (wall time excepted). Runs may execute in parallel workers.
std::vector<RunRecord> run_suite(const SuiteConfig& cfg);

enum class ProfileMetric { Iterations, WallTime, CostEvals };

const char* to_string(ProfileMetric metric);
ProfileMetric profile_metric_from_string(const std::string& name);

/// P_s as a step function: breakpoints tau with values P_s(tau), starting at
/// tau = 1 and ending at the solver's solved fraction.
struct ProfileCurve {
  std::string solver_id;
  std::vector<std::pair<double, double>> points;
  double solved_fraction = 0.0;
};

/// Ratio-to-best performance profiles. Each (problem kind, repetition) pair
/// is one problem; runs that did not converge enter with an infinite ratio.
std::vector<ProfileCurve> performance_profile(const std::vector<RunRecord>& records,
                                              ProfileMetric metric);

std::string records_to_csv(const std::vector<RunRecord>& records);
std::vector<RunRecord> records_from_csv(const std::string& text);
std::string records_to_jsonl(const std::vector<RunRecord>& records);
std::vector<RunRecord> records_from_jsonl(const std::string& text);

std::string profile_to_csv(const std::vector<ProfileCurve>& curves);
std::vector<ProfileCurve> profile_from_csv(const std::string& text);

/// Static step plot, one polyline per solver, tau on a log axis.
std::string profile_to_svg(const std::vector<ProfileCurve>& curves, const std::string& title);

/// Writes records.csv, records.jsonl, profile_<metric>.csv and
/// profile_<metric>.svg into out_dir. Refuses an empty curve list before
/// touching the filesystem; I/O failures carry the offending path.
void emit_report(const std::vector<ProfileCurve>& curves, const std::vector<RunRecord>& records,
                 const std::filesystem::path& out_dir, ProfileMetric metric);

}  // namespace rcg
