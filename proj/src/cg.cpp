#include "rcg/cg.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rcg {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

double zoutendijk_term(double dir_deriv, double eta_norm) {
  if (eta_norm <= 0.0) return 0.0;
  const double q = dir_deriv / eta_norm;
  return q * q;
}

}  // namespace

void BetaRule::validate() const {
  if ((variant == BetaVariant::HZ || variant == BetaVariant::SD) && !(mu > 0.25))
    throw std::invalid_argument("BetaRule: mu must exceed 1/4");
}

std::string BetaRule::name() const {
  switch (variant) {
    case BetaVariant::FR:
      return "FR";
    case BetaVariant::PRP:
      return "PRP";
    case BetaVariant::HS:
      return "HS";
    case BetaVariant::DY:
      return "DY";
    case BetaVariant::Hybrid1:
      return "Hybrid1";
    case BetaVariant::Hybrid2:
      return "Hybrid2";
    case BetaVariant::HZ:
      return "HZ";
    case BetaVariant::SD:
      return xi_choice == XiChoice::HzQuotient ? "SD" : "SD-ydiff";
  }
  return "?";
}

BetaRule beta_rule_from_string(const std::string& name) {
  BetaRule rule;
  if (name == "FR")
    rule.variant = BetaVariant::FR;
  else if (name == "PRP")
    rule.variant = BetaVariant::PRP;
  else if (name == "HS")
    rule.variant = BetaVariant::HS;
  else if (name == "DY")
    rule.variant = BetaVariant::DY;
  else if (name == "Hybrid1")
    rule.variant = BetaVariant::Hybrid1;
  else if (name == "Hybrid2")
    rule.variant = BetaVariant::Hybrid2;
  else if (name == "HZ")
    rule.variant = BetaVariant::HZ;
  else if (name == "SD") {
    rule.variant = BetaVariant::SD;
    rule.xi_choice = XiChoice::HzQuotient;
  } else if (name == "SD-ydiff") {
    rule.variant = BetaVariant::SD;
    rule.xi_choice = XiChoice::GradientDifference;
  } else {
    throw std::invalid_argument("unknown beta rule: " + name);
  }
  return rule;
}

const char* to_string(StepStrategy strategy) {
  switch (strategy) {
    case StepStrategy::Backtracking:
      return "bt";
    case StepStrategy::StrongWolfe:
      return "sw";
    case StepStrategy::RandomizedArmijo:
      return "rand";
  }
  return "?";
}

StepStrategy step_strategy_from_string(const std::string& name) {
  if (name == "bt" || name == "backtracking") return StepStrategy::Backtracking;
  if (name == "sw" || name == "strong_wolfe") return StepStrategy::StrongWolfe;
  if (name == "rand" || name == "randomized") return StepStrategy::RandomizedArmijo;
  throw std::invalid_argument("unknown step strategy: " + name);
}

void SolverConfig::validate() const {
  beta_rule.validate();
  linesearch.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be positive");
  if (max_iters < 0) throw std::invalid_argument("SolverConfig: max_iters must be nonnegative");
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged:
      return "Converged";
    case SolveStatus::MaxIters:
      return "MaxIters";
    case SolveStatus::LineSearchFailed:
      return "LineSearchFailed";
  }
  return "?";
}

SolveStatus solve_status_from_string(const std::string& name) {
  if (name == "Converged") return SolveStatus::Converged;
  if (name == "MaxIters") return SolveStatus::MaxIters;
  if (name == "LineSearchFailed") return SolveStatus::LineSearchFailed;
  throw std::invalid_argument("unknown solve status: " + name);
}

double beta(const BetaRule& rule, const Manifold& man, const CgState& next) {
  rule.validate();
  const double gg = man.inner(next.x, next.g, next.g);
  const double g_prev_sq = next.g_norm_prev * next.g_norm_prev;
  if (g_prev_sq == 0.0) return 0.0;
  const double g_dot_te = man.inner(next.x, next.g, next.transported_eta);
  const double denom = g_dot_te - next.dir_deriv_prev;
  // Degenerate denominators reduce the update to steepest descent.
  const double guard = 1e-14 * std::max(1.0, std::sqrt(gg) * next.eta_norm_prev);
  const bool denom_ok = std::abs(denom) >= guard;
  const auto y = [&]() { return axpy(-1.0, next.transported_g, next.g); };

  switch (rule.variant) {
    case BetaVariant::FR:
      return gg / g_prev_sq;
    case BetaVariant::PRP:
      return man.inner(next.x, next.g, y()) / g_prev_sq;
    case BetaVariant::HS: {
      if (!denom_ok) return 0.0;
      return man.inner(next.x, next.g, y()) / denom;
    }
    case BetaVariant::DY: {
      if (!denom_ok) return 0.0;
      return gg / denom;
    }
    case BetaVariant::Hybrid1: {
      if (!denom_ok) return 0.0;
      const Tangent yv = y();
      const double hs = man.inner(next.x, next.g, yv) / denom;
      const double dy = gg / denom;
      return std::max(0.0, std::min(hs, dy));
    }
    case BetaVariant::Hybrid2: {
      const double fr = gg / g_prev_sq;
      const double prp = man.inner(next.x, next.g, y()) / g_prev_sq;
      return std::max(0.0, std::min(fr, prp));
    }
    case BetaVariant::HZ: {
      if (!denom_ok) return 0.0;
      const Tangent yv = y();
      const double hs = man.inner(next.x, next.g, yv) / denom;
      const double y_sq = man.inner(next.x, yv, yv);
      return hs - rule.mu * y_sq * g_dot_te / (denom * denom);
    }
    case BetaVariant::SD: {
      Tangent xi = y();
      if (rule.xi_choice == XiChoice::HzQuotient) {
        if (!denom_ok) return 0.0;
        xi = scaled(xi, 1.0 / denom);
      }
      const double base = man.inner(next.x, next.g, xi);
      const double xi_sq = man.inner(next.x, xi, xi);
      return base - rule.mu * xi_sq * g_dot_te;
    }
  }
  throw std::logic_error("unreachable");
}

StepResult step(const Objective& f, const CgState& state, const SolverConfig& cfg,
                EvalCounters& evals, std::mt19937_64& rng) {
  const Manifold& man = f.manifold;
  StepResult out;

  Phi phi = Phi::restrict(f, state.x, state.eta, state.cost, state.g);
  LineSearchConfig ls = cfg.linesearch;
  LineSearchResult lr;
  bool degraded = false;
  switch (cfg.strategy) {
    case StepStrategy::Backtracking:
      lr = backtracking(phi, ls);
      break;
    case StepStrategy::StrongWolfe:
      lr = strong_wolfe(phi, ls);
      if (!lr.ok() && cfg.wolfe_degrade_to_armijo) {
        LineSearchConfig armijo = ls;
        armijo.alpha_hi = ls.alpha0;
        armijo.alpha0 = ls.alpha0;
        lr = backtracking(phi, armijo);
        degraded = lr.ok();
      }
      break;
    case StepStrategy::RandomizedArmijo: {
      std::uniform_real_distribution<double> start(0.1, 1.0);
      std::uniform_real_distribution<double> shrink(0.3, 0.7);
      ls.alpha_hi = cfg.linesearch.alpha_hi * start(rng);
      ls.alpha0 = std::min(ls.alpha0, ls.alpha_hi);
      ls.rho = shrink(rng);
      lr = backtracking(phi, ls);
      break;
    }
  }
  evals.cost += phi.cost_evals();
  evals.grad += phi.grad_evals();
  if (!lr.ok()) {
    out.ls_status = lr.status;
    return out;
  }

  const double alpha = lr.alpha;
  const Tangent d = scaled(state.eta, alpha);
  const Point x_new = man.retract(state.x, d);
  const double f_new = phi.value(alpha);  // memoized by the line search
  const Tangent g_new = f.grad(x_new);
  ++evals.grad;

  // Move eta_k with the scaled transport. Transporting the whole step vector
  // and dividing by alpha keeps the clip threshold at ||eta_k||, which is
  // also the scale factor s_k the descent analysis tracks.
  const ScaledTransport dir_moved = man.transport_scaled(state.x, d, d, x_new);
  const Tangent t_eta = scaled(dir_moved.vector, 1.0 / alpha);
  // g_k moves under the same nonexpansive scaling, clipped at its own norm.
  Tangent t_g = man.transport_diff(state.x, d, state.g, x_new);
  const double tg_norm = man.norm(x_new, t_g);
  const double g_norm_old = man.norm(state.x, state.g);
  if (tg_norm > g_norm_old && tg_norm > 0.0) t_g = scaled(t_g, g_norm_old / tg_norm);

  CgState next;
  next.k = state.k + 1;
  next.x = x_new;
  next.g = g_new;
  next.cost = f_new;
  next.alpha_prev = alpha;
  next.transported_eta = t_eta;
  next.transported_g = t_g;
  next.scale_s = dir_moved.scale;
  next.g_norm_prev = man.norm(state.x, state.g);
  next.dir_deriv_prev = man.inner(state.x, state.g, state.eta);
  next.eta_norm_prev = man.norm(state.x, state.eta);

  const double b = beta(cfg.beta_rule, man, next);
  next.eta = axpy(b, t_eta, scaled(g_new, -1.0));
  double dir_deriv = man.inner(x_new, g_new, next.eta);
  bool fallback = false;
  if (cfg.descent_fallback && dir_deriv >= 0.0) {
    next.eta = scaled(g_new, -1.0);
    dir_deriv = -man.inner(x_new, g_new, g_new);
    fallback = true;
  }

  TraceRecord rec;
  rec.k = next.k;
  rec.cost = f_new;
  rec.grad_norm = man.norm(x_new, g_new);
  rec.dir_deriv = dir_deriv;
  rec.eta_norm = man.norm(x_new, next.eta);
  rec.beta = b;
  rec.alpha = alpha;
  rec.scale_s = dir_moved.scale;
  rec.fallback = fallback;
  rec.degraded = degraded;
  rec.cost_evals = evals.cost;
  rec.grad_evals = evals.grad;

  out.ok = true;
  out.state = std::move(next);
  out.record = rec;
  return out;
}

Trace solve(const Objective& f, const Point& x0, const SolverConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const Manifold& man = f.manifold;
  if (!man.is_point(x0)) throw std::invalid_argument("solve: x0 is not on the manifold");

  EvalCounters evals;
  std::mt19937_64 rng(mix_seed(cfg.rng_seed, 0x57e901dfull));

  CgState s;
  s.k = 0;
  s.x = x0;
  s.cost = f.cost(x0);
  ++evals.cost;
  s.g = f.grad(x0);
  ++evals.grad;
  s.eta = scaled(s.g, -1.0);
  s.transported_eta = man.zero_tangent(x0);
  s.transported_g = man.zero_tangent(x0);
  s.g_norm_prev = 0.0;

  Trace tr;
  const double g0_norm = man.norm(x0, s.g);
  TraceRecord r0;
  r0.k = 0;
  r0.cost = s.cost;
  r0.grad_norm = g0_norm;
  r0.dir_deriv = -g0_norm * g0_norm;
  r0.eta_norm = g0_norm;
  r0.cost_evals = evals.cost;
  r0.grad_evals = evals.grad;
  r0.zoutendijk_partial = zoutendijk_term(r0.dir_deriv, r0.eta_norm);
  tr.records.push_back(r0);

  SolveStatus status = SolveStatus::MaxIters;
  while (true) {
    if (man.norm(s.x, s.g) <= cfg.tol) {
      status = SolveStatus::Converged;
      break;
    }
    if (s.k >= cfg.max_iters) {
      status = SolveStatus::MaxIters;
      break;
    }
    if (man.inner(s.x, s.g, s.eta) >= 0.0) {
      // Non-descent direction with the fallback disabled: the search cannot
      // proceed, record the run as failed.
      status = SolveStatus::LineSearchFailed;
      break;
    }
    StepResult st;
    try {
      st = step(f, s, cfg, evals, rng);
    } catch (const RetractionError&) {
      st.ok = false;
    }
    if (!st.ok) {
      status = SolveStatus::LineSearchFailed;
      break;
    }
    s = std::move(st.state);
    st.record.zoutendijk_partial =
        tr.records.back().zoutendijk_partial + zoutendijk_term(st.record.dir_deriv, st.record.eta_norm);
    tr.records.push_back(st.record);
  }

  tr.status = status;
  tr.iterations = s.k;
  tr.final_cost = s.cost;
  tr.final_grad_norm = man.norm(s.x, s.g);
  tr.cost_evals = evals.cost;
  tr.grad_evals = evals.grad;
  tr.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return tr;
}

AuditReport descent_audit(const Trace& trace, const BetaRule& rule, const SolverConfig& cfg,
                          double tol) {
  AuditReport report;
  const double c2 = cfg.linesearch.c2;
  const bool strong = cfg.strategy == StepStrategy::StrongWolfe;
  switch (rule.variant) {
    case BetaVariant::FR:
    case BetaVariant::Hybrid2:
      if (strong && c2 < 0.5) {
        report.applicable = true;
        report.ratio_lower = -1.0 / (1.0 - c2);
        report.ratio_upper = -(1.0 - 2.0 * c2) / (1.0 - c2);
        report.bound_desc = rule.name() + " under strong Wolfe, c2 < 1/2";
      }
      break;
    case BetaVariant::DY:
      if (strong) {
        report.applicable = true;
        report.ratio_lower = -1.0 / (1.0 - c2);
        report.ratio_upper = -1.0 / (1.0 + c2);
        report.bound_desc = "DY under Wolfe";
      }
      break;
    case BetaVariant::Hybrid1:
      if (strong) {
        report.applicable = true;
        report.ratio_lower = -(1.0 + c2) / (1.0 - c2);
        report.ratio_upper = -(1.0 - c2) / (1.0 + c2);
        report.bound_desc = "Hybrid1 under strong Wolfe";
      }
      break;
    case BetaVariant::HZ:
    case BetaVariant::SD:
      report.applicable = true;
      report.ratio_lower = -kInf;
      report.ratio_upper = -(1.0 - 1.0 / (4.0 * rule.mu));
      report.bound_desc = rule.name() + " under any step size";
      break;
    default:
      break;
  }
  if (!report.applicable) return report;
  report.kappa = -report.ratio_upper;

  const bool wolfe_based = rule.variant != BetaVariant::HZ && rule.variant != BetaVariant::SD;
  for (const TraceRecord& rec : trace.records) {
    if (rec.fallback || (wolfe_based && rec.degraded)) {
      ++report.fallback_excluded;
      continue;
    }
    if (rec.grad_norm <= 0.0) continue;
    const double ratio = rec.dir_deriv / (rec.grad_norm * rec.grad_norm);
    ++report.checked;
    const double over = ratio - report.ratio_upper;
    const double under = report.ratio_lower - ratio;
    const double slack = std::max(over, under);
    if (slack > tol) {
      ++report.violations;
      report.violating_iters.push_back(rec.k);
      report.worst_slack = std::max(report.worst_slack, slack);
    }
  }
  return report;
}

std::string trace_to_jsonl(const Trace& trace) {
  std::ostringstream out;
  json meta;
  meta["type"] = "meta";
  meta["status"] = to_string(trace.status);
  meta["iterations"] = trace.iterations;
  meta["final_cost"] = trace.final_cost;
  meta["final_grad_norm"] = trace.final_grad_norm;
  meta["cost_evals"] = trace.cost_evals;
  meta["grad_evals"] = trace.grad_evals;
  meta["wall_time_sec"] = trace.wall_time_sec;
  out << meta.dump() << "\n";
  for (const TraceRecord& r : trace.records) {
    json j;
    j["type"] = "record";
    j["k"] = r.k;
    j["cost"] = r.cost;
    j["grad_norm"] = r.grad_norm;
    j["dir_deriv"] = r.dir_deriv;
    j["eta_norm"] = r.eta_norm;
    j["beta"] = r.beta;
    j["alpha"] = r.alpha;
    j["scale_s"] = r.scale_s;
    j["fallback"] = r.fallback;
    j["degraded"] = r.degraded;
    j["cost_evals"] = r.cost_evals;
    j["grad_evals"] = r.grad_evals;
    j["zoutendijk_partial"] = r.zoutendijk_partial;
    out << j.dump() << "\n";
  }
  return out.str();
}

Trace trace_from_jsonl(const std::string& text) {
  Trace tr;
  std::istringstream in(text);
  std::string line;
  bool have_meta = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "meta") {
      tr.status = solve_status_from_string(j.at("status").get<std::string>());
      tr.iterations = j.at("iterations").get<int>();
      tr.final_cost = j.at("final_cost").get<double>();
      tr.final_grad_norm = j.at("final_grad_norm").get<double>();
      tr.cost_evals = j.at("cost_evals").get<long>();
      tr.grad_evals = j.at("grad_evals").get<long>();
      tr.wall_time_sec = j.at("wall_time_sec").get<double>();
      have_meta = true;
    } else if (type == "record") {
      TraceRecord r;
      r.k = j.at("k").get<int>();
      r.cost = j.at("cost").get<double>();
      r.grad_norm = j.at("grad_norm").get<double>();
      r.dir_deriv = j.at("dir_deriv").get<double>();
      r.eta_norm = j.at("eta_norm").get<double>();
      r.beta = j.at("beta").get<double>();
      r.alpha = j.at("alpha").get<double>();
      r.scale_s = j.at("scale_s").get<double>();
      r.fallback = j.at("fallback").get<bool>();
      r.degraded = j.at("degraded").get<bool>();
      r.cost_evals = j.at("cost_evals").get<long>();
      r.grad_evals = j.at("grad_evals").get<long>();
      r.zoutendijk_partial = j.at("zoutendijk_partial").get<double>();
      tr.records.push_back(r);
    } else {
      throw std::invalid_argument("trace jsonl: unknown line type " + type);
    }
  }
  if (!have_meta) throw std::invalid_argument("trace jsonl: missing meta line");
  return tr;
}

}  // namespace rcg
