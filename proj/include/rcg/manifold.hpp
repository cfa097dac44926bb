#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rcg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thrown when a retraction cannot produce a valid point: zero normalization
/// on the sphere/oblique manifolds, a zero diagonal in the Stiefel QR factor,
/// or rank collapse on the fixed-rank manifold.
class RetractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point on a manifold in ambient coordinates. The dense manifolds (sphere,
/// Stiefel, oblique) use `m`; the fixed-rank manifold stores the factored
/// form X = u * diag(s) * v^T with orthonormal u, v and positive s.
struct Point {
  Matrix m;
  Matrix u;
  Vector s;
  Matrix v;
};

/// Tangent vector anchored at `base`. Dense manifolds use `m`; fixed-rank
/// tangents stay structured as u*mid*v^T + up*v^T + u*vp^T with u^T up = 0
/// and v^T vp = 0. Densification happens only on demand.
struct Tangent {
  Point base;
  Matrix m;
  Matrix mid;
  Matrix up;
  Matrix vp;
};

struct ScaledTransport {
  Tangent vector;
  double scale = 1.0;
};

/// Exact (bitwise) equality of ambient representations.
bool same_point(const Point& a, const Point& b);

/// Geometry kernel for the four supported manifolds: Riemannian metric,
/// tangent projection, retraction, differentiated vector transport and its
/// norm-clipped variant. All operations are pure; a Manifold value is
/// immutable after construction and safe to share across threads.
class Manifold {
 public:
  enum class Kind { Sphere, Stiefel, FixedRank, Oblique };

  static Manifold sphere(Index n);               // unit vectors in R^n, n >= 2
  static Manifold stiefel(Index p, Index n);     // n x p, orthonormal columns
  static Manifold fixed_rank(Index m, Index n, Index k);  // rank-k m x n
  static Manifold oblique(Index n, Index p);     // n x p, unit-norm columns

  Kind kind() const { return kind_; }
  std::string name() const;
  Index ambient_rows() const { return rows_; }
  Index ambient_cols() const { return cols_; }
  Index rank() const { return rank_; }
  /// Intrinsic manifold dimension.
  Index dim() const;

  /// Embedded (ambient Euclidean/Frobenius) metric. Both tangents must be
  /// based at x.
  double inner(const Point& x, const Tangent& u, const Tangent& v) const;
  double norm(const Point& x, const Tangent& u) const;

  /// Metric-orthogonal projection of an ambient array onto T_x M.
  Tangent project(const Point& x, const Matrix& ambient) const;

  /// Sphere/oblique: normalization. Stiefel: Q factor of the thin QR of
  /// x + eta with the positive-diagonal convention. Fixed rank: rank-k
  /// truncated SVD of x + eta, computed in factored form.
  Point retract(const Point& x, const Tangent& eta) const;

  /// Differentiated retraction: the derivative of retract at eta applied to
  /// xi, based at retract(x, eta). Closed forms for sphere, oblique and
  /// Stiefel; projected central finite differences for fixed rank.
  Tangent transport_diff(const Point& x, const Tangent& eta, const Tangent& xi) const;

  /// transport_diff clipped so its norm never exceeds ||eta||. Returns the
  /// (possibly rescaled) vector together with the applied scale factor,
  /// which is 1 when no clipping occurred. A zero-norm eta or a zero-norm
  /// transported vector passes through unscaled.
  ScaledTransport transport_scaled(const Point& x, const Tangent& eta, const Tangent& xi) const;

  /// Variants that anchor their result at a destination point the caller
  /// already computed as retract(x, eta).
  Tangent transport_diff(const Point& x, const Tangent& eta, const Tangent& xi,
                         const Point& dst) const;
  ScaledTransport transport_scaled(const Point& x, const Tangent& eta, const Tangent& xi,
                                   const Point& dst) const;

  /// Deterministic per seed: standard-normal ambient sample, then
  /// normalized/orthonormalized/projected as appropriate.
  Point random_point(std::uint64_t seed) const;
  Tangent random_tangent(const Point& x, std::uint64_t seed) const;

  Tangent zero_tangent(const Point& x) const;

  Matrix dense(const Point& x) const;
  Matrix dense(const Tangent& t) const;

  /// Feasibility check at the standard tolerances (1e-12 sphere norm,
  /// 1e-10 orthonormality / column norms, positive fixed-rank spectrum).
  bool is_point(const Point& x) const;
  /// Tangency check: projecting t at its base is the identity to `tol`
  /// relative.
  bool is_tangent(const Point& x, const Tangent& t, double tol = 1e-10) const;

 private:
  Manifold(Kind k, Index rows, Index cols, Index rank);

  Point retract_dense(const Matrix& sum) const;
  Point retract_fixed_rank(const Point& x, const Tangent& eta) const;
  Tangent transport_diff_fixed_rank(const Point& x, const Tangent& eta, const Tangent& xi,
                                    const Point& dst) const;

  Kind kind_;
  Index rows_;
  Index cols_;
  Index rank_;
};

/// Linear operations on tangents sharing a base point.
Tangent scaled(const Tangent& t, double a);
Tangent add(const Tangent& a, const Tangent& b);
Tangent axpy(double a, const Tangent& x, const Tangent& y);  // a*x + y
bool is_zero_tangent(const Tangent& t);

/// Splitmix64-style mixing for deriving independent RNG streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace rcg
