#pragma once

#include <functional>
#include <memory>

#include "rcg/manifold.hpp"
#include "rcg/objective.hpp"

namespace rcg {

enum class Interpolation { Bisection, Quadratic };

struct LineSearchConfig {
  double c1 = 1e-4;
  double c2 = 0.9;
  double rho = 0.5;
  double alpha_hi = 1.0;
  double alpha0 = 1.0;
  double expansion = 2.0;
  int max_iters = 60;
  int zoom_max_iters = 30;
  Interpolation interpolation = Interpolation::Bisection;

  /// Throws std::invalid_argument unless 0 < c1 < c2 < 1, rho in (0,1),
  /// 0 < alpha0 <= alpha_hi and expansion > 1.
  void validate() const;
};

/// One-dimensional restriction of an objective along a search direction:
/// phi(a) = f(R_x(a*eta)) and phi'(a) = <grad f(R_x(a*eta)), T^R_{a*eta}(eta)>.
/// Evaluations are memoized per step size and counted exactly; repeated
/// queries at the same step size cost nothing. Single-use and
/// single-threaded; distinct searches may run concurrently on distinct Phi
/// values.
class Phi {
 public:
  /// Scalar test hook: explicit phi and phi'.
  Phi(std::function<double(double)> value_fn, std::function<double(double)> deriv_fn);

  static Phi restrict(const Objective& f, const Point& x, const Tangent& eta);
  /// Variant reusing already-known values f(x) and grad f(x), so phi(0) and
  /// phi'(0) cost no evaluations.
  static Phi restrict(const Objective& f, const Point& x, const Tangent& eta, double f0,
                      const Tangent& g0);

  double value(double alpha) const;
  double deriv(double alpha) const;
  double value0() const { return value(0.0); }
  double deriv0() const { return deriv(0.0); }

  long cost_evals() const;
  long grad_evals() const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

struct ConditionFlags {
  bool armijo = false;
  bool wolfe = false;
  bool strong_wolfe = false;
};

/// armijo:       phi(a) <= phi(0) + c1*a*phi'(0)
/// wolfe:        armijo and phi'(a) >= c2*phi'(0)
/// strong_wolfe: armijo and |phi'(a)| <= c2*|phi'(0)|
ConditionFlags check_conditions(const Phi& phi, double alpha, const LineSearchConfig& cfg);

enum class LineSearchStatus { Success, MaxIters, IntervalCollapse, VerificationFailed };

struct LineSearchResult {
  double alpha = 0.0;
  LineSearchStatus status = LineSearchStatus::Success;
  bool ok() const { return status == LineSearchStatus::Success; }
};

/// Backtracking from alpha_hi by factors of rho until the Armijo condition
/// holds. Requires phi'(0) < 0. On cap exhaustion the result carries the
/// last step size tried.
LineSearchResult backtracking(const Phi& phi, const LineSearchConfig& cfg);

/// Bracketing search for a strong-Wolfe step: trials grow from alpha0 by the
/// expansion factor (capped at alpha_hi) until a bracket is found, then zoom
/// refines it. A successful return is re-verified against both strong-Wolfe
/// inequalities before it is handed back.
LineSearchResult strong_wolfe(const Phi& phi, const LineSearchConfig& cfg);

/// Bracket refinement. alpha_lo must carry the lowest phi among trials that
/// pass Armijo; for smooth phi the interval then contains a strong-Wolfe
/// point. Interpolation is bisection unless the config selects quadratic.
LineSearchResult zoom(const Phi& phi, double alpha_lo, double alpha_hi_local,
                      const LineSearchConfig& cfg);

}  // namespace rcg
