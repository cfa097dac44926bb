#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rcg/linesearch.hpp"
#include "rcg/manifold.hpp"
#include "rcg/objective.hpp"

namespace rcg {

enum class BetaVariant { FR, PRP, HS, DY, Hybrid1, Hybrid2, HZ, SD };

/// Tangent choice for the SD rule: the quotient that reproduces HZ exactly,
/// or the plain gradient difference y.
enum class XiChoice { HzQuotient, GradientDifference };

struct BetaRule {
  BetaVariant variant = BetaVariant::HZ;
  double mu = 2.0;                              // HZ/SD modifier weight, > 1/4
  XiChoice xi_choice = XiChoice::HzQuotient;    // SD only

  void validate() const;
  std::string name() const;
};

BetaRule beta_rule_from_string(const std::string& name);

enum class StepStrategy { Backtracking, StrongWolfe, RandomizedArmijo };

const char* to_string(StepStrategy strategy);
StepStrategy step_strategy_from_string(const std::string& name);

struct SolverConfig {
  BetaRule beta_rule{};
  LineSearchConfig linesearch{};
  StepStrategy strategy = StepStrategy::StrongWolfe;
  double tol = 1e-6;
  int max_iters = 5000;
  /// Reset the direction to steepest descent whenever the update produces a
  /// non-descent direction; the reset is flagged in the trace so audits can
  /// exclude those iterations. With this off, a non-descent direction ends
  /// the run as a line-search failure.
  bool descent_fallback = true;
  /// When the bracketing search cannot certify a strong-Wolfe step (which
  /// happens once cost differences fall below double precision near the
  /// stopping tolerance), retry the iteration with plain Armijo backtracking
  /// from alpha0 instead of terminating the run. The degraded step is
  /// flagged in the trace and excluded from Wolfe-based audits. Off by
  /// default; the benchmark harness enables it, matching the reference
  /// implementations this setup descends from, which return the last trial
  /// step with a warning rather than fail.
  bool wolfe_degrade_to_armijo = false;
  std::uint64_t rng_seed = 0;  // randomized-Armijo step-size mode

  void validate() const;
};

/// Per-iteration solver state. `transported_eta`/`transported_g` hold the
/// previous direction and gradient moved into the current point by the
/// scaled transport; the `*_prev` scalars cache the previous iteration's
/// quantities the beta formulas consume.
struct CgState {
  int k = 0;
  Point x;
  Tangent g;
  Tangent eta;
  double cost = 0.0;
  double alpha_prev = 0.0;
  Tangent transported_eta;
  Tangent transported_g;
  double scale_s = 1.0;
  double g_norm_prev = 0.0;
  double dir_deriv_prev = 0.0;
  double eta_norm_prev = 0.0;
};

struct TraceRecord {
  int k = 0;
  double cost = 0.0;
  double grad_norm = 0.0;
  double dir_deriv = 0.0;  // <g_k, eta_k>
  double eta_norm = 0.0;
  double beta = 0.0;       // coefficient used to form eta_k (0 at k = 0)
  double alpha = 0.0;      // accepted step size that produced x_k (0 at k = 0)
  double scale_s = 1.0;
  bool fallback = false;
  bool degraded = false;  // step accepted by the Armijo retry, not strong Wolfe
  long cost_evals = 0;  // cumulative
  long grad_evals = 0;  // cumulative
  double zoutendijk_partial = 0.0;  // running sum of <g,eta>^2 / ||eta||^2
};

enum class SolveStatus { Converged, MaxIters, LineSearchFailed };

const char* to_string(SolveStatus status);
SolveStatus solve_status_from_string(const std::string& name);

struct Trace {
  std::vector<TraceRecord> records;  // one per iteration, plus the initial state
  SolveStatus status = SolveStatus::MaxIters;
  int iterations = 0;
  double final_cost = 0.0;
  double final_grad_norm = 0.0;
  long cost_evals = 0;
  long grad_evals = 0;
  double wall_time_sec = 0.0;
};

struct EvalCounters {
  long cost = 0;
  long grad = 0;
};

/// beta_{k+1} for the configured rule, evaluated on a k+1 state whose
/// gradient, scaled transports and previous-iteration scalars are filled in
/// (the search direction need not be). Degenerate denominators yield 0.
double beta(const BetaRule& rule, const Manifold& man, const CgState& next);

struct StepResult {
  bool ok = false;
  LineSearchStatus ls_status = LineSearchStatus::Success;
  CgState state;
  TraceRecord record;
};

/// One iteration: line search along eta, retract, transport, compute beta
/// and the next direction. Requires a descent direction on entry. Throws
/// RetractionError through from degenerate geometry; a failed line search
/// comes back with ok = false.
StepResult step(const Objective& f, const CgState& state, const SolverConfig& cfg,
                EvalCounters& evals, std::mt19937_64& rng);

/// Full solver loop from x0 until the gradient norm falls to cfg.tol, the
/// iteration cap is reached, or a line search fails.
Trace solve(const Objective& f, const Point& x0, const SolverConfig& cfg);

/// Per-iteration sufficient-descent audit of a recorded trace. The bound on
/// ratio = <g,eta>/||g||^2 depends on the rule and the step-size strategy:
/// one-sided ratio <= -(1 - 1/(4 mu)) for HZ/SD under any strategy; two-sided
/// intervals for FR/Hybrid2 (strong Wolfe, c2 < 1/2), DY (Wolfe) and Hybrid1
/// (strong Wolfe). Pairs with no stated bound report not applicable.
/// Fallback iterations are excluded and counted.
struct AuditReport {
  bool applicable = false;
  std::string bound_desc = "no applicable bound";
  double ratio_lower = 0.0;
  double ratio_upper = 0.0;
  double kappa = 0.0;  // sufficient-descent coefficient (= -ratio_upper)
  int checked = 0;
  int violations = 0;
  int fallback_excluded = 0;
  double worst_slack = 0.0;
  std::vector<int> violating_iters;
};

AuditReport descent_audit(const Trace& trace, const BetaRule& rule, const SolverConfig& cfg,
                          double tol = 1e-8);

/// Trace serialization: one JSON object per line (a meta line followed by
/// one line per record).
std::string trace_to_jsonl(const Trace& trace);
Trace trace_from_jsonl(const std::string& text);

}  // namespace rcg
