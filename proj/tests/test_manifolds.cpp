#include "rcg/manifold.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"

using namespace rcg;
using namespace rcg_test;

TEST_CASE("manifold construction validates dimension parameters") {
  CHECK_THROWS_AS(Manifold::sphere(1), std::invalid_argument);
  CHECK_THROWS_AS(Manifold::stiefel(3, 2), std::invalid_argument);
  CHECK_THROWS_AS(Manifold::stiefel(0, 2), std::invalid_argument);
  CHECK_THROWS_AS(Manifold::fixed_rank(2, 2, 3), std::invalid_argument);
  CHECK_THROWS_AS(Manifold::oblique(0, 1), std::invalid_argument);
  CHECK(Manifold::sphere(2).dim() == 1);
  CHECK(Manifold::stiefel(2, 5).dim() == 7);
  CHECK(Manifold::fixed_rank(9, 7, 3).dim() == 39);
  CHECK(Manifold::oblique(6, 3).dim() == 15);
}

TEST_CASE("inner product matches the ambient metric") {
  const Manifold s3 = Manifold::sphere(3);
  const Point x = unit_vector_point(3, 0);
  Matrix e2 = Matrix::Zero(3, 1);
  e2(1, 0) = 1.0;
  Matrix e3 = Matrix::Zero(3, 1);
  e3(2, 0) = 1.0;
  const Tangent u = dense_tangent(x, e2);
  const Tangent v = dense_tangent(x, e3);
  CHECK(s3.inner(x, u, u) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s3.inner(x, u, v) == doctest::Approx(0.0).epsilon(1e-14));

  const Manifold st = Manifold::stiefel(1, 2);
  const Point xs = unit_vector_point(2, 0);
  Matrix a(2, 1), b(2, 1);
  a << 0.0, 2.0;
  b << 0.0, 3.0;
  CHECK(st.inner(xs, dense_tangent(xs, a), dense_tangent(xs, b)) == doctest::Approx(6.0));

  // Mismatched base points are a contract violation.
  const Point y = unit_vector_point(3, 1);
  CHECK_THROWS_AS(s3.inner(x, u, dense_tangent(y, e3)), std::invalid_argument);
}

TEST_CASE("projection closed forms and idempotence") {
  const Manifold s2 = Manifold::sphere(2);
  const Point x = unit_vector_point(2, 0);
  CHECK(s2.project(x, x.m).m.norm() == doctest::Approx(0.0).epsilon(1e-15));
  Matrix e2 = Matrix::Zero(2, 1);
  e2(1, 0) = 1.0;
  CHECK((s2.project(x, e2).m - e2).norm() == doctest::Approx(0.0).epsilon(1e-15));

  const Manifold ob = Manifold::oblique(2, 1);
  Matrix ones(2, 1);
  ones << 1.0, 1.0;
  const Tangent t = ob.project(x, ones);
  CHECK(t.m(0, 0) == doctest::Approx(0.0));
  CHECK(t.m(1, 0) == doctest::Approx(1.0));

  CHECK_THROWS_AS(s2.project(x, Matrix::Zero(3, 1)), std::invalid_argument);

  for (const Manifold& m : small_manifolds()) {
    CAPTURE(m.name());
    for (int rep = 0; rep < 25; ++rep) {
      const Point p = m.random_point(100 + rep);
      const Tangent a = m.random_tangent(p, 200 + rep);
      // Idempotence on an already-tangent vector.
      const Tangent pa = m.project(p, m.dense(a));
      CHECK((m.dense(pa) - m.dense(a)).norm() <= 1e-10 * std::max(1.0, m.dense(a).norm()));
    }
  }
}

TEST_CASE("projection is self-adjoint for the ambient metric") {
  for (const Manifold& m : small_manifolds()) {
    CAPTURE(m.name());
    for (int rep = 0; rep < 25; ++rep) {
      const Point p = m.random_point(300 + rep);
      std::mt19937_64 rng(mix_seed(17, rep));
      std::normal_distribution<double> g;
      Matrix a(m.ambient_rows(), m.ambient_cols()), b(m.ambient_rows(), m.ambient_cols());
      for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i) {
          a(i, j) = g(rng);
          b(i, j) = g(rng);
        }
      const double lhs = (m.dense(m.project(p, a)).array() * b.array()).sum();
      const double rhs = (a.array() * m.dense(m.project(p, b)).array()).sum();
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
  }
}

TEST_CASE("retraction examples") {
  const Manifold s2 = Manifold::sphere(2);
  const Point x = unit_vector_point(2, 0);
  Matrix e2 = Matrix::Zero(2, 1);
  e2(1, 0) = 1.0;
  const Point y = s2.retract(x, dense_tangent(x, e2));
  CHECK(y.m(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(y.m(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(y.m.norm() == doctest::Approx(1.0).epsilon(1e-14));

  // eta = -x makes the sum exactly zero.
  CHECK_THROWS_AS(s2.retract(x, dense_tangent(x, (-x.m).eval())), RetractionError);

  for (const Manifold& m : small_manifolds()) {
    CAPTURE(m.name());
    const Point p = m.random_point(7);
    const Point r = m.retract(p, m.zero_tangent(p));
    CHECK(same_point(r, p));  // first retraction axiom, exactly
  }
}

TEST_CASE("retraction first-order agreement with the identity") {
  for (const Manifold& m : small_manifolds()) {
    CAPTURE(m.name());
    for (int rep = 0; rep < 10; ++rep) {
      const Point p = m.random_point(400 + rep);
      Tangent xi = m.random_tangent(p, 500 + rep);
      xi = scaled(xi, 1.0 / m.norm(p, xi));
      double prev = std::numeric_limits<double>::infinity();
      for (double t : {1e-3, 1e-4, 1e-5}) {
        const Matrix diff = (m.dense(m.retract(p, scaled(xi, t))) - m.dense(p)) / t;
        const double err = (diff - m.dense(xi)).norm();
        CHECK(err < prev);
        prev = err;
      }
      CHECK(prev <= 1e-4);
    }
  }
}

TEST_CASE("retraction outputs satisfy the point invariants") {
  for (const Manifold& m : small_manifolds()) {
    CAPTURE(m.name());
    for (int rep = 0; rep < 25; ++rep) {
      const Point p = m.random_point(600 + rep);
      CHECK(m.is_point(p));
      const Tangent xi = m.random_tangent(p, 700 + rep);
      const Point q = m.retract(p, xi);
      CHECK(m.is_point(q));
      CHECK(m.is_tangent(q, m.project(q, m.dense(xi)), 1e-10));
    }
  }
}

TEST_CASE("differentiated transport: identity at zero and linearity") {
  for (const Manifold& m : small_manifolds()) {
    CAPTURE(m.name());
    for (int rep = 0; rep < 15; ++rep) {
      const Point p = m.random_point(800 + rep);
      const Tangent xi = m.random_tangent(p, 900 + rep);
      const Tangent moved = m.transport_diff(p, m.zero_tangent(p), xi);
      CHECK((m.dense(moved) - m.dense(xi)).norm() <= 1e-12 * std::max(1.0, m.dense(xi).norm()));

      const Tangent eta = m.random_tangent(p, 1000 + rep);
      const Tangent zeta = m.random_tangent(p, 1100 + rep);
      const double a = 0.5 + 0.1 * rep, b = -1.25;
      const Tangent lhs = m.transport_diff(p, eta, axpy(a, xi, scaled(zeta, b)));
      const Tangent ta = m.transport_diff(p, eta, xi);
      const Tangent tb = m.transport_diff(p, eta, zeta);
      const Matrix want = a * m.dense(ta) + b * m.dense(tb);
      const double scale = std::max(1.0, want.norm());
      // The fixed-rank transport is finite-difference based; its noise floor
      // sits near 1e-7, so it gets a wider budget than the closed forms.
      const double tol = m.kind() == Manifold::Kind::FixedRank ? 2e-6 : 1e-8;
      CHECK((m.dense(lhs) - want).norm() <= tol * scale);
    }
  }
}

TEST_CASE("differentiated transport agrees with the finite-difference oracle") {
  // Sphere(2) spot check from the closed form.
  const Manifold s2 = Manifold::sphere(2);
  const Point x = unit_vector_point(2, 0);
  Matrix e2 = Matrix::Zero(2, 1);
  e2(1, 0) = 1.0;
  const Tangent eta = dense_tangent(x, e2);
  const Tangent got = s2.transport_diff(x, eta, eta);
  const Tangent want = fd_transport(s2, x, eta, eta, 1e-6);
  CHECK((s2.dense(got) - s2.dense(want)).norm() <= 1e-6);

  for (const Manifold& m : small_manifolds()) {
    CAPTURE(m.name());
    for (int rep = 0; rep < 10; ++rep) {
      const Point p = m.random_point(1200 + rep);
      const Tangent d = m.random_tangent(p, 1300 + rep);
      const Tangent v = m.random_tangent(p, 1400 + rep);
      const Tangent lhs = m.transport_diff(p, d, v);
      const Tangent rhs = fd_transport(m, p, d, v, 1e-6);
      const double scale = std::max(1.0, m.dense(rhs).norm());
      CHECK((m.dense(lhs) - m.dense(rhs)).norm() <= 1e-5 * scale);
    }
  }
}

TEST_CASE("transport results are tangent at the destination") {
  for (const Manifold& m : small_manifolds()) {
    CAPTURE(m.name());
    for (int rep = 0; rep < 10; ++rep) {
      const Point p = m.random_point(1500 + rep);
      const Tangent d = m.random_tangent(p, 1600 + rep);
      const Tangent v = m.random_tangent(p, 1700 + rep);
      const Point dst = m.retract(p, d);
      const Tangent moved = m.transport_diff(p, d, v, dst);
      CHECK(same_point(moved.base, dst));
      CHECK(m.is_tangent(dst, moved, 1e-8));
    }
  }
}

TEST_CASE("scaled transport clips to the transport direction norm") {
  const Manifold s2 = Manifold::sphere(2);
  const Point x = unit_vector_point(2, 0);
  Matrix e2 = Matrix::Zero(2, 1);
  e2(1, 0) = 1.0;

  // Large transport direction: the differentiated transport contracts, so no
  // clipping happens and the result matches transport_diff with scale 1.
  const Tangent eta_big = dense_tangent(x, (3.0 * e2).eval());
  const Tangent xi = dense_tangent(x, e2);
  const ScaledTransport big = s2.transport_scaled(x, eta_big, xi);
  const Tangent plain = s2.transport_diff(x, eta_big, xi);
  CHECK(big.scale == 1.0);
  CHECK((s2.dense(big.vector) - s2.dense(plain)).norm() == 0.0);

  // Tiny transport direction with a large argument: clipping must land the
  // output norm exactly on ||eta||.
  const Tangent eta_tiny = dense_tangent(x, (1e-3 * e2).eval());
  const Tangent xi_big = dense_tangent(x, (5.0 * e2).eval());
  const ScaledTransport clipped = s2.transport_scaled(x, eta_tiny, xi_big);
  CHECK(clipped.scale < 1.0);
  const Point dst = s2.retract(x, eta_tiny);
  CHECK(std::abs(s2.norm(dst, clipped.vector) - s2.norm(x, eta_tiny)) <= 1e-12);

  // Zero transport direction passes through unscaled.
  const ScaledTransport zero = s2.transport_scaled(x, s2.zero_tangent(x), xi);
  CHECK(zero.scale == 1.0);
  CHECK((s2.dense(zero.vector) - s2.dense(xi)).norm() == 0.0);
}

TEST_CASE("scaled transport of the direction itself never expands") {
  for (const Manifold& m : small_manifolds()) {
    CAPTURE(m.name());
    for (int rep = 0; rep < 50; ++rep) {
      const Point p = m.random_point(1800 + rep);
      Tangent d = m.random_tangent(p, 1900 + rep);
      if (rep % 3 == 0) d = scaled(d, 0.01);  // also probe small steps
      const double dn = m.norm(p, d);
      const Point dst = m.retract(p, d);
      const ScaledTransport st = m.transport_scaled(p, d, d, dst);
      CHECK(st.scale > 0.0);
      CHECK(st.scale <= 1.0);
      CHECK(m.norm(dst, st.vector) <= dn + 1e-12);
    }
  }
}

TEST_CASE("random points and tangents are deterministic and feasible") {
  for (const Manifold& m : small_manifolds()) {
    CAPTURE(m.name());
    const Point a = m.random_point(42);
    const Point b = m.random_point(42);
    CHECK(same_point(a, b));
    CHECK(m.is_point(a));

    const Tangent t1 = m.random_tangent(a, 43);
    const Tangent t2 = m.random_tangent(a, 43);
    CHECK((m.dense(t1) - m.dense(t2)).norm() == 0.0);

    // Projection idempotence on the sampled tangent.
    const Tangent pt = m.project(a, m.dense(t1));
    CHECK((m.dense(pt) - m.dense(t1)).norm() <= 1e-10 * std::max(1.0, m.dense(t1).norm()));
  }
}

TEST_CASE("tangent arithmetic requires matching base points") {
  const Manifold s3 = Manifold::sphere(3);
  const Point x = s3.random_point(1);
  const Point y = s3.random_point(2);
  const Tangent u = s3.random_tangent(x, 3);
  const Tangent v = s3.random_tangent(y, 4);
  CHECK_THROWS_AS(add(u, v), std::invalid_argument);
  const Tangent w = axpy(2.0, u, u);
  CHECK((s3.dense(w) - 3.0 * s3.dense(u)).norm() <= 1e-14 * s3.dense(u).norm());
}
