#include "rcg/linesearch.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rcg {

void LineSearchConfig::validate() const {
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0))
    throw std::invalid_argument("LineSearchConfig: need 0 < c1 < c2 < 1");
  if (!(0.0 < rho && rho < 1.0)) throw std::invalid_argument("LineSearchConfig: rho in (0,1)");
  if (!(alpha_hi > 0.0)) throw std::invalid_argument("LineSearchConfig: alpha_hi > 0");
  if (!(alpha0 > 0.0 && alpha0 <= alpha_hi))
    throw std::invalid_argument("LineSearchConfig: alpha0 in (0, alpha_hi]");
  if (!(expansion > 1.0)) throw std::invalid_argument("LineSearchConfig: expansion > 1");
  if (max_iters < 1 || zoom_max_iters < 1)
    throw std::invalid_argument("LineSearchConfig: iteration caps must be positive");
}

struct Phi::State {
  std::function<double(double)> value_fn;
  std::function<double(double)> deriv_fn;
  std::vector<std::pair<double, double>> value_memo;
  std::vector<std::pair<double, double>> deriv_memo;
  long cost_evals = 0;
  long grad_evals = 0;

  static bool lookup(const std::vector<std::pair<double, double>>& memo, double key, double& out) {
    for (const auto& [k, v] : memo)
      if (k == key) {
        out = v;
        return true;
      }
    return false;
  }
};

Phi::Phi(std::function<double(double)> value_fn, std::function<double(double)> deriv_fn)
    : state_(std::make_shared<State>()) {
  state_->value_fn = std::move(value_fn);
  state_->deriv_fn = std::move(deriv_fn);
}

Phi Phi::restrict(const Objective& f, const Point& x, const Tangent& eta) {
  // Retractions are shared between phi and phi' at equal step sizes.
  struct RetrCache {
    bool valid = false;
    double alpha = 0.0;
    Point p;
  };
  auto cache = std::make_shared<RetrCache>();
  const Manifold man = f.manifold;
  auto point_at = [man, x, eta, cache](double a) -> Point {
    if (a == 0.0) return x;
    if (cache->valid && cache->alpha == a) return cache->p;
    cache->p = man.retract(x, scaled(eta, a));
    cache->alpha = a;
    cache->valid = true;
    return cache->p;
  };
  auto value_fn = [f, point_at](double a) { return f.cost(point_at(a)); };
  auto deriv_fn = [f, man, x, eta, point_at](double a) {
    const Point p = point_at(a);
    const Tangent g = f.grad(p);
    if (a == 0.0) return man.inner(x, g, eta);
    const Tangent moved = man.transport_diff(x, scaled(eta, a), eta, p);
    return man.inner(p, g, moved);
  };
  return Phi(std::move(value_fn), std::move(deriv_fn));
}

Phi Phi::restrict(const Objective& f, const Point& x, const Tangent& eta, double f0,
                  const Tangent& g0) {
  Phi phi = restrict(f, x, eta);
  phi.state_->value_memo.emplace_back(0.0, f0);
  phi.state_->deriv_memo.emplace_back(0.0, f.manifold.inner(x, g0, eta));
  return phi;
}

double Phi::value(double alpha) const {
  double out;
  if (State::lookup(state_->value_memo, alpha, out)) return out;
  out = state_->value_fn(alpha);
  ++state_->cost_evals;
  state_->value_memo.emplace_back(alpha, out);
  return out;
}

double Phi::deriv(double alpha) const {
  double out;
  if (State::lookup(state_->deriv_memo, alpha, out)) return out;
  out = state_->deriv_fn(alpha);
  ++state_->grad_evals;
  state_->deriv_memo.emplace_back(alpha, out);
  return out;
}

long Phi::cost_evals() const { return state_->cost_evals; }
long Phi::grad_evals() const { return state_->grad_evals; }

ConditionFlags check_conditions(const Phi& phi, double alpha, const LineSearchConfig& cfg) {
  const double f0 = phi.value0();
  const double d0 = phi.deriv0();
  ConditionFlags out;
  out.armijo = phi.value(alpha) <= f0 + cfg.c1 * alpha * d0;
  if (!out.armijo) return out;
  const double da = phi.deriv(alpha);
  out.wolfe = da >= cfg.c2 * d0;
  out.strong_wolfe = std::abs(da) <= cfg.c2 * std::abs(d0);
  return out;
}

LineSearchResult backtracking(const Phi& phi, const LineSearchConfig& cfg) {
  cfg.validate();
  const double d0 = phi.deriv0();
  if (!(d0 < 0.0)) throw std::invalid_argument("backtracking: phi'(0) must be negative");
  const double f0 = phi.value0();
  double alpha = cfg.alpha_hi;
  for (int j = 0; j < cfg.max_iters; ++j) {
    if (phi.value(alpha) <= f0 + cfg.c1 * alpha * d0) return {alpha, LineSearchStatus::Success};
    if (j + 1 < cfg.max_iters) alpha *= cfg.rho;
  }
  return {alpha, LineSearchStatus::MaxIters};
}

namespace {

double interpolate(const Phi& phi, double lo, double hi, const LineSearchConfig& cfg) {
  const double mid = 0.5 * (lo + hi);
  if (cfg.interpolation == Interpolation::Bisection) return mid;
  // Minimizer of the quadratic through (lo, phi(lo), phi'(lo)) and (hi, phi(hi)),
  // safeguarded to the interior of the bracket.
  const double delta = hi - lo;
  const double flo = phi.value(lo);
  const double dlo = phi.deriv(lo);
  const double fhi = phi.value(hi);
  const double curv = (fhi - flo - dlo * delta) / (delta * delta);
  if (!(curv > 0.0) || !std::isfinite(curv)) return mid;
  const double cand = lo - dlo / (2.0 * curv);
  const double margin = 0.1 * std::abs(delta);
  const double lob = std::min(lo, hi) + margin;
  const double hib = std::max(lo, hi) - margin;
  if (!(cand >= lob && cand <= hib)) return mid;
  return cand;
}

}  // namespace

LineSearchResult zoom(const Phi& phi, double alpha_lo, double alpha_hi_local,
                      const LineSearchConfig& cfg) {
  cfg.validate();
  const double f0 = phi.value0();
  const double d0 = phi.deriv0();
  double lo = alpha_lo;
  double hi = alpha_hi_local;
  double best = lo;
  for (int j = 0; j < cfg.zoom_max_iters; ++j) {
    if (std::abs(hi - lo) < 1e-16) return {best, LineSearchStatus::IntervalCollapse};
    const double a = interpolate(phi, lo, hi, cfg);
    const double fa = phi.value(a);
    if (fa > f0 + cfg.c1 * a * d0 || fa >= phi.value(lo)) {
      hi = a;
    } else {
      best = a;
      const double da = phi.deriv(a);
      if (std::abs(da) <= -cfg.c2 * d0) return {a, LineSearchStatus::Success};
      if (da * (hi - lo) >= 0.0) hi = lo;
      lo = a;
    }
  }
  return {best, LineSearchStatus::MaxIters};
}

LineSearchResult strong_wolfe(const Phi& phi, const LineSearchConfig& cfg) {
  cfg.validate();
  const double d0 = phi.deriv0();
  if (!(d0 < 0.0)) throw std::invalid_argument("strong_wolfe: phi'(0) must be negative");
  const double f0 = phi.value0();

  const auto verified = [&](LineSearchResult r) -> LineSearchResult {
    if (!r.ok()) return r;
    return check_conditions(phi, r.alpha, cfg).strong_wolfe
               ? r
               : LineSearchResult{r.alpha, LineSearchStatus::VerificationFailed};
  };

  double alpha_prev = 0.0;
  double phi_prev = f0;
  double alpha = std::min(cfg.alpha0, cfg.alpha_hi);
  double best_alpha = 0.0;
  double best_phi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cfg.max_iters; ++i) {
    const double phi_a = phi.value(alpha);
    if (phi_a > f0 + cfg.c1 * alpha * d0 || (i > 0 && phi_a >= phi_prev))
      return verified(zoom(phi, alpha_prev, alpha, cfg));
    if (phi_a < best_phi) {
      best_phi = phi_a;
      best_alpha = alpha;
    }
    const double deriv_a = phi.deriv(alpha);
    if (std::abs(deriv_a) <= -cfg.c2 * d0) return verified({alpha, LineSearchStatus::Success});
    if (deriv_a >= 0.0) return verified(zoom(phi, alpha, alpha_prev, cfg));
    if (alpha >= cfg.alpha_hi) break;  // cap reached with no bracket
    alpha_prev = alpha;
    phi_prev = phi_a;
    alpha = std::min(cfg.expansion * alpha, cfg.alpha_hi);
  }
  return {best_alpha > 0.0 ? best_alpha : alpha, LineSearchStatus::MaxIters};
}

}  // namespace rcg
