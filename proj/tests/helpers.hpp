#pragma once

#include "rcg/manifold.hpp"

#include <vector>

namespace rcg_test {

using namespace rcg;

inline std::vector<Manifold> small_manifolds() {
  return {Manifold::sphere(6), Manifold::stiefel(3, 7), Manifold::fixed_rank(9, 7, 3),
          Manifold::oblique(6, 3)};
}

// Independent transport oracle: dense central difference of the retraction
// followed by tangent projection at retract(x, eta). Deliberately goes
// through the dense representation so it shares no code with the library's
// closed forms or its factored finite differences.
inline Tangent fd_transport(const Manifold& m, const Point& x, const Tangent& eta,
                            const Tangent& xi, double h) {
  const Point dst = m.retract(x, eta);
  const Matrix plus = m.dense(m.retract(x, axpy(h, xi, eta)));
  const Matrix minus = m.dense(m.retract(x, axpy(-h, xi, eta)));
  return m.project(dst, (plus - minus) / (2.0 * h));
}

inline Point unit_vector_point(Index n, Index i) {
  Point p;
  p.m = Matrix::Zero(n, 1);
  p.m(i, 0) = 1.0;
  return p;
}

inline Tangent dense_tangent(const Point& base, const Matrix& value) {
  Tangent t;
  t.base = base;
  t.m = value;
  return t;
}

}  // namespace rcg_test
