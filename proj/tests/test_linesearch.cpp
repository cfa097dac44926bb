#include "rcg/linesearch.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "rcg/objectives.hpp"

using namespace rcg;
using namespace rcg_test;

namespace {

Phi quadratic_phi(double q, double r) {
  // phi(a) = q*(a - r)^2, minimized at r; phi'(0) = -2qr < 0 for q, r > 0.
  return Phi([q, r](double a) { return q * (a - r) * (a - r); },
             [q, r](double a) { return 2.0 * q * (a - r); });
}

}  // namespace

TEST_CASE("config validation") {
  LineSearchConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.c2 = cfg.c1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = LineSearchConfig{};
  cfg.alpha0 = 2.0;  // above alpha_hi
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("check_conditions on a hand-evaluated quadratic") {
  // phi(a) = (1 - 2a)^2 comes from f(x) = x^2 on the line, x = 1, direction -2.
  Phi phi([](double a) { return (1.0 - 2.0 * a) * (1.0 - 2.0 * a); },
          [](double a) { return -4.0 * (1.0 - 2.0 * a); });
  LineSearchConfig cfg;
  const ConditionFlags at_half = check_conditions(phi, 0.5, cfg);
  CHECK(at_half.armijo);
  CHECK(at_half.strong_wolfe);  // phi'(0.5) = 0
  CHECK(at_half.wolfe);

  // An ascent step fails Armijo outright.
  const ConditionFlags at_one = check_conditions(phi, 1.0, cfg);  // phi(1) = 1 = phi(0)
  CHECK(!at_one.armijo);
  CHECK(!at_one.strong_wolfe);
}

TEST_CASE("strong Wolfe implies Wolfe") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.05, 2.0);
  LineSearchConfig cfg;
  for (int rep = 0; rep < 200; ++rep) {
    Phi phi = quadratic_phi(unif(rng), unif(rng));
    const ConditionFlags flags = check_conditions(phi, unif(rng), cfg);
    if (flags.strong_wolfe) CHECK(flags.wolfe);
  }
}

TEST_CASE("backtracking accepts the first Armijo step") {
  LineSearchConfig cfg;
  Phi phi([](double a) { return (1.0 - 2.0 * a) * (1.0 - 2.0 * a); },
          [](double a) { return -4.0 * (1.0 - 2.0 * a); });
  const LineSearchResult r = backtracking(phi, cfg);
  CHECK(r.ok());
  CHECK(r.alpha == doctest::Approx(0.5));  // alpha = 1 fails Armijo, 0.5 passes

  // A linearly decreasing phi accepts alpha_hi immediately.
  Phi lin([](double a) { return -a; }, [](double) { return -1.0; });
  const LineSearchResult rl = backtracking(lin, cfg);
  CHECK(rl.ok());
  CHECK(rl.alpha == cfg.alpha_hi);

  // Non-descent entry is a precondition violation.
  Phi up([](double a) { return a; }, [](double) { return 1.0; });
  CHECK_THROWS_AS(backtracking(up, cfg), std::invalid_argument);
}

TEST_CASE("backtracking trial sequence is alpha_hi * rho^j") {
  auto trials = std::make_shared<std::vector<double>>();
  Phi phi(
      [trials](double a) {
        trials->push_back(a);
        return 1e280 * a * a - 1e-12 * a;
      },
      [](double a) { return 2e280 * a - 1e-12; });
  LineSearchConfig cfg;
  const LineSearchResult r = backtracking(phi, cfg);
  CHECK(r.status == LineSearchStatus::MaxIters);
  CHECK(r.alpha == trials->back());
  REQUIRE(trials->front() == 0.0);  // the phi(0) probe
  trials->erase(trials->begin());
  REQUIRE(trials->size() == static_cast<std::size_t>(cfg.max_iters));
  for (std::size_t j = 0; j < trials->size(); ++j) {
    CHECK((*trials)[j] == doctest::Approx(cfg.alpha_hi * std::pow(cfg.rho, double(j))));
    if (j > 0) CHECK((*trials)[j] < (*trials)[j - 1]);
  }
}

TEST_CASE("strong_wolfe accepts a flat minimum at the first trial") {
  LineSearchConfig cfg;
  Phi phi = quadratic_phi(1.0, 1.0);  // (a-1)^2
  const LineSearchResult r = strong_wolfe(phi, cfg);
  CHECK(r.ok());
  CHECK(r.alpha == doctest::Approx(1.0));

  Phi up([](double a) { return a; }, [](double) { return 1.0; });
  CHECK_THROWS_AS(strong_wolfe(up, cfg), std::invalid_argument);
}

TEST_CASE("strong_wolfe brackets and zooms when the first trial overshoots") {
  LineSearchConfig cfg;
  Phi phi = quadratic_phi(1.0, 0.05);  // (a-0.05)^2, phi'(0) = -0.1
  const LineSearchResult r = strong_wolfe(phi, cfg);
  REQUIRE(r.ok());
  CHECK(std::abs(2.0 * (r.alpha - 0.05)) <= cfg.c2 * 0.1);  // |phi'(a*)| <= c2|phi'(0)|
  const ConditionFlags flags = check_conditions(phi, r.alpha, cfg);
  CHECK(flags.armijo);
  CHECK(flags.strong_wolfe);
}

TEST_CASE("successful strong_wolfe returns satisfy both inequalities") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> qdist(0.2, 8.0);
  std::uniform_real_distribution<double> rdist(0.02, 3.0);
  LineSearchConfig cfg;
  cfg.alpha_hi = 8.0;
  int successes = 0;
  for (int rep = 0; rep < 300; ++rep) {
    Phi phi = quadratic_phi(qdist(rng), rdist(rng));
    LineSearchResult r = strong_wolfe(phi, cfg);
    if (!r.ok()) continue;
    ++successes;
    const ConditionFlags flags = check_conditions(phi, r.alpha, cfg);
    CHECK(flags.armijo);
    CHECK(flags.strong_wolfe);
  }
  CHECK(successes >= 290);  // quadratics should essentially always succeed
}

TEST_CASE("zoom hand-evaluated case and bracket interiority") {
  LineSearchConfig cfg;
  Phi phi = quadratic_phi(1.0, 1.0);
  const LineSearchResult r = zoom(phi, 0.0, 2.0, cfg);
  REQUIRE(r.ok());
  CHECK(r.alpha == doctest::Approx(1.0));  // first bisection trial hits the minimum

  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> qdist(0.5, 5.0);
  std::uniform_real_distribution<double> rdist(0.05, 1.5);
  std::uniform_real_distribution<double> hdist(0.3, 2.0);
  for (int rep = 0; rep < 100; ++rep) {
    const double q = qdist(rng), rmin = rdist(rng);
    Phi p = quadratic_phi(q, rmin);
    const double hi = rmin * (1.0 + hdist(rng));
    // Grid oracle: confirm a strong-Wolfe point exists inside the bracket.
    bool contains = false;
    for (int g = 1; g < 1000; ++g) {
      const double a = hi * g / 1000.0;
      const ConditionFlags f = check_conditions(p, a, cfg);
      if (f.strong_wolfe) {
        contains = true;
        break;
      }
    }
    REQUIRE(contains);
    Phi fresh = quadratic_phi(q, rmin);
    const LineSearchResult rz = zoom(fresh, 0.0, hi, cfg);
    REQUIRE(rz.ok());
    CHECK(rz.alpha > 0.0);
    CHECK(rz.alpha < hi);
    CHECK(check_conditions(fresh, rz.alpha, cfg).strong_wolfe);
  }
}

TEST_CASE("quadratic interpolation stays inside the bracket and converges") {
  LineSearchConfig cfg;
  cfg.interpolation = Interpolation::Quadratic;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> qdist(0.5, 5.0);
  std::uniform_real_distribution<double> rdist(0.05, 1.5);
  for (int rep = 0; rep < 50; ++rep) {
    const double q = qdist(rng), rmin = rdist(rng);
    Phi p = quadratic_phi(q, rmin);
    const LineSearchResult rz = zoom(p, 0.0, rmin * 2.5, cfg);
    REQUIRE(rz.ok());
    CHECK(rz.alpha > 0.0);
    CHECK(rz.alpha < rmin * 2.5);
    CHECK(check_conditions(p, rz.alpha, cfg).strong_wolfe);
  }
}

TEST_CASE("phi eval counters are exact and memoized") {
  auto vcount = std::make_shared<int>(0);
  auto dcount = std::make_shared<int>(0);
  Phi phi(
      [vcount](double a) {
        ++*vcount;
        return (a - 1.0) * (a - 1.0);
      },
      [dcount](double a) {
        ++*dcount;
        return 2.0 * (a - 1.0);
      });
  phi.value(0.5);
  phi.value(0.5);
  phi.deriv(0.5);
  phi.value0();
  phi.deriv0();
  phi.deriv0();
  CHECK(*vcount == 2);
  CHECK(*dcount == 2);
  CHECK(phi.cost_evals() == 2);
  CHECK(phi.grad_evals() == 2);
}

TEST_CASE("objective-backed phi matches direct evaluation") {
  ProblemDims d;
  d.rayleigh_n = 10;
  const ObjectiveInstance inst = make_instance(ProblemKind::Rayleigh, 4, d);
  const Objective obj = make_objective(inst);
  const Point x = obj.manifold.random_point(1);
  const double f0 = obj.cost(x);
  const Tangent g = obj.grad(x);
  const Tangent eta = scaled(g, -1.0);

  Phi phi = Phi::restrict(obj, x, eta, f0, g);
  CHECK(phi.value0() == f0);
  CHECK(phi.deriv0() == obj.manifold.inner(x, g, eta));
  CHECK(phi.cost_evals() == 0);  // seeded values cost nothing
  CHECK(phi.grad_evals() == 0);

  const double a = 0.25;
  const Point xa = obj.manifold.retract(x, scaled(eta, a));
  CHECK(phi.value(a) == doctest::Approx(obj.cost(xa)).epsilon(1e-15));
  const Tangent moved = obj.manifold.transport_diff(x, scaled(eta, a), eta);
  CHECK(phi.deriv(a) ==
        doctest::Approx(obj.manifold.inner(xa, obj.grad(xa), moved)).epsilon(1e-12));
  CHECK(phi.cost_evals() == 1);
  CHECK(phi.grad_evals() == 1);
}

TEST_CASE("line searches on manifold objectives satisfy their contracts") {
  // Independent re-evaluation (fresh cost/grad calls, not the Phi memo) on a
  // sample of manifold cases; the acceptance suite runs the full-scale sweep.
  ProblemDims d;
  d.rayleigh_n = 10;
  d.brockett_p = 2;
  d.brockett_n = 6;
  d.completion_m = 10;
  d.completion_n = 8;
  d.completion_k = 2;
  d.offdiag_count = 3;
  d.offdiag_n = 8;
  d.offdiag_p = 2;
  LineSearchConfig cfg;
  cfg.alpha_hi = 16.0;
  for (ProblemKind kind : {ProblemKind::Rayleigh, ProblemKind::Brockett, ProblemKind::Completion,
                           ProblemKind::OffDiag}) {
    CAPTURE(to_string(kind));
    const ObjectiveInstance inst = make_instance(kind, 8, d);
    const Objective obj = make_objective(inst);
    for (int rep = 0; rep < 10; ++rep) {
      const Point x = obj.manifold.random_point(mix_seed(3, rep));
      const Tangent g = obj.grad(x);
      if (obj.manifold.norm(x, g) < 1e-12) continue;
      Tangent eta = axpy(-1.0, g, obj.manifold.random_tangent(x, mix_seed(4, rep)));
      if (obj.manifold.inner(x, g, eta) >= 0.0) eta = scaled(g, -1.0);

      const double f0 = obj.cost(x);
      const double d0 = obj.manifold.inner(x, g, eta);

      const LineSearchResult bt = backtracking(Phi::restrict(obj, x, eta, f0, g), cfg);
      if (bt.ok()) {
        const Point xa = obj.manifold.retract(x, scaled(eta, bt.alpha));
        CHECK(obj.cost(xa) <= f0 + cfg.c1 * bt.alpha * d0 + 1e-14 * std::abs(f0));
      }

      const LineSearchResult sw = strong_wolfe(Phi::restrict(obj, x, eta, f0, g), cfg);
      if (sw.ok()) {
        const Tangent step = scaled(eta, sw.alpha);
        const Point xa = obj.manifold.retract(x, step);
        CHECK(obj.cost(xa) <= f0 + cfg.c1 * sw.alpha * d0 + 1e-14 * std::abs(f0));
        const Tangent moved = obj.manifold.transport_diff(x, step, eta, xa);
        const double da = obj.manifold.inner(xa, obj.grad(xa), moved);
        CHECK(std::abs(da) <= cfg.c2 * std::abs(d0) + 1e-12 * std::abs(d0));
      }
    }
  }
}
