#pragma once

#include <functional>

#include "rcg/manifold.hpp"

namespace rcg {

/// Callback form of a smooth objective: cost and Riemannian gradient on a
/// manifold. This is the only interface the solver and line searches consume.
struct Objective {
  Manifold manifold;
  std::function<double(const Point&)> cost;
  std::function<Tangent(const Point&)> grad;
};

}  // namespace rcg
