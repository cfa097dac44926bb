#include "rcg/manifold.hpp"

#include <cmath>
#include <random>

namespace rcg {

namespace {

constexpr double kDegenerate = 1e-100;

bool exact_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  if (a.size() == 0) return true;
  return (a.array() == b.array()).all();
}

bool exact_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  if (a.size() == 0) return true;
  return (a.array() == b.array()).all();
}

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = g(rng);
  return a;
}

// Thin QR with the positive-diagonal convention on R.
void thin_qr_pos(const Matrix& y, Matrix& q, Matrix& r) {
  const Index cols = std::min(y.rows(), y.cols());
  Eigen::HouseholderQR<Matrix> qr(y);
  q = qr.householderQ() * Matrix::Identity(y.rows(), cols);
  r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Index j = 0; j < cols; ++j) {
    if (r(j, j) < 0.0) {
      r.row(j) = -r.row(j);
      q.col(j) = -q.col(j);
    }
  }
}

// Skew part of the skew-plus-upper-triangular decomposition used by the
// differentiated QR retraction.
Matrix rho_skew(const Matrix& w) {
  Matrix a = Matrix::Zero(w.rows(), w.cols());
  for (Index j = 0; j < w.cols(); ++j) {
    for (Index i = j + 1; i < w.rows(); ++i) {
      a(i, j) = w(i, j);
      a(j, i) = -w(i, j);
    }
  }
  return a;
}

}  // namespace

bool same_point(const Point& a, const Point& b) {
  return exact_equal(a.m, b.m) && exact_equal(a.u, b.u) && exact_equal(a.s, b.s) &&
         exact_equal(a.v, b.v);
}

Manifold::Manifold(Kind k, Index rows, Index cols, Index rank)
    : kind_(k), rows_(rows), cols_(cols), rank_(rank) {}

Manifold Manifold::sphere(Index n) {
  require(n >= 2, "Manifold::sphere: n must be >= 2");
  return Manifold(Kind::Sphere, n, 1, 0);
}

Manifold Manifold::stiefel(Index p, Index n) {
  require(p >= 1 && p <= n, "Manifold::stiefel: need 1 <= p <= n");
  return Manifold(Kind::Stiefel, n, p, 0);
}

Manifold Manifold::fixed_rank(Index m, Index n, Index k) {
  require(k >= 1 && k <= std::min(m, n), "Manifold::fixed_rank: need 1 <= k <= min(m,n)");
  return Manifold(Kind::FixedRank, m, n, k);
}

Manifold Manifold::oblique(Index n, Index p) {
  require(n >= 1 && p >= 1, "Manifold::oblique: need n >= 1, p >= 1");
  return Manifold(Kind::Oblique, n, p, 0);
}

std::string Manifold::name() const {
  switch (kind_) {
    case Kind::Sphere:
      return "Sphere(" + std::to_string(rows_) + ")";
    case Kind::Stiefel:
      return "Stiefel(" + std::to_string(cols_) + "," + std::to_string(rows_) + ")";
    case Kind::FixedRank:
      return "FixedRank(" + std::to_string(rows_) + "," + std::to_string(cols_) + "," +
             std::to_string(rank_) + ")";
    case Kind::Oblique:
      return "Oblique(" + std::to_string(rows_) + "," + std::to_string(cols_) + ")";
  }
  return "?";
}

Index Manifold::dim() const {
  switch (kind_) {
    case Kind::Sphere:
      return rows_ - 1;
    case Kind::Stiefel:
      return rows_ * cols_ - cols_ * (cols_ + 1) / 2;
    case Kind::FixedRank:
      return (rows_ + cols_ - rank_) * rank_;
    case Kind::Oblique:
      return (rows_ - 1) * cols_;
  }
  return 0;
}

double Manifold::inner(const Point& x, const Tangent& u, const Tangent& v) const {
  require(same_point(u.base, x) && same_point(v.base, x),
          "Manifold::inner: tangents are not based at the given point");
  if (kind_ == Kind::FixedRank) {
    return u.mid.cwiseProduct(v.mid).sum() + u.up.cwiseProduct(v.up).sum() +
           u.vp.cwiseProduct(v.vp).sum();
  }
  return u.m.cwiseProduct(v.m).sum();
}

double Manifold::norm(const Point& x, const Tangent& u) const {
  return std::sqrt(std::max(0.0, inner(x, u, u)));
}

Tangent Manifold::project(const Point& x, const Matrix& ambient) const {
  require(ambient.rows() == rows_ && ambient.cols() == cols_,
          "Manifold::project: ambient array has the wrong shape");
  Tangent t;
  t.base = x;
  switch (kind_) {
    case Kind::Sphere: {
      const double c = (x.m.transpose() * ambient)(0, 0);
      t.m = ambient - c * x.m;
      break;
    }
    case Kind::Stiefel: {
      const Matrix xa = x.m.transpose() * ambient;
      t.m = ambient - x.m * ((xa + xa.transpose()) * 0.5);
      break;
    }
    case Kind::Oblique: {
      t.m = ambient;
      for (Index j = 0; j < cols_; ++j) {
        const double c = x.m.col(j).dot(ambient.col(j));
        t.m.col(j) -= c * x.m.col(j);
      }
      break;
    }
    case Kind::FixedRank: {
      const Matrix zv = ambient * x.v;
      const Matrix ztu = ambient.transpose() * x.u;
      t.mid = x.u.transpose() * zv;
      t.up = zv - x.u * t.mid;
      t.vp = ztu - x.v * t.mid.transpose();
      break;
    }
  }
  return t;
}

Point Manifold::retract_dense(const Matrix& sum) const {
  Point p;
  if (kind_ == Kind::Sphere) {
    const double w = sum.norm();
    if (w < kDegenerate) throw RetractionError("sphere retraction: zero vector");
    p.m = sum / w;
  } else if (kind_ == Kind::Oblique) {
    p.m = sum;
    for (Index j = 0; j < cols_; ++j) {
      const double w = p.m.col(j).norm();
      if (w < kDegenerate) throw RetractionError("oblique retraction: zero column");
      p.m.col(j) /= w;
    }
  } else {  // Stiefel
    Matrix q, r;
    thin_qr_pos(sum, q, r);
    for (Index j = 0; j < cols_; ++j)
      if (r(j, j) < kDegenerate) throw RetractionError("stiefel retraction: rank-deficient step");
    p.m = q;
  }
  return p;
}

Point Manifold::retract_fixed_rank(const Point& x, const Tangent& eta) const {
  const Index k = rank_;
  Matrix y1(rows_, 2 * k), y2(cols_, 2 * k);
  y1 << x.u, eta.up;
  y2 << x.v, eta.vp;
  Matrix q1, r1, q2, r2;
  thin_qr_pos(y1, q1, r1);
  thin_qr_pos(y2, q2, r2);
  Matrix b = Matrix::Zero(2 * k, 2 * k);
  b.topLeftCorner(k, k) = eta.mid;
  b.topLeftCorner(k, k) += x.s.asDiagonal();
  b.topRightCorner(k, k) = Matrix::Identity(k, k);
  b.bottomLeftCorner(k, k) = Matrix::Identity(k, k);
  const Matrix core = r1 * b * r2.transpose();
  Eigen::JacobiSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (sv(0) < kDegenerate || sv(k - 1) <= sv(0) * 1e-14)
    throw RetractionError("fixed-rank retraction: rank collapse");
  Point p;
  p.u = q1 * svd.matrixU().leftCols(k);
  p.s = sv.head(k);
  p.v = q2 * svd.matrixV().leftCols(k);
  return p;
}

Point Manifold::retract(const Point& x, const Tangent& eta) const {
  require(same_point(eta.base, x), "Manifold::retract: tangent is not based at the given point");
  if (is_zero_tangent(eta)) return x;
  if (kind_ == Kind::FixedRank) return retract_fixed_rank(x, eta);
  return retract_dense(x.m + eta.m);
}

Tangent Manifold::transport_diff_fixed_rank(const Point& x, const Tangent& eta, const Tangent& xi,
                                            const Point& dst) const {
  // The map is linear in xi, so differentiate along the normalized argument
  // and rescale; this keeps the probe displacement h*||xi|| at the intended
  // size even for tiny xi, where SVD roundoff would otherwise swamp the
  // difference quotient.
  const double xi_norm = norm(x, xi);
  if (xi_norm == 0.0) {
    Tangent z = zero_tangent(x);
    z.base = dst;
    return z;
  }
  const Tangent unit = scaled(xi, 1.0 / xi_norm);
  const double eta_norm = norm(x, eta);
  const double h = 1e-7 * std::max(1.0, eta_norm);
  const Point plus = retract(x, axpy(h, unit, eta));
  const Point minus = retract(x, axpy(-h, unit, eta));
  // Z = (plus - minus) / 2h projected at dst, assembled from the factors so
  // nothing m x n is ever formed.
  const Matrix zv = (plus.u * (plus.s.asDiagonal() * (plus.v.transpose() * dst.v)) -
                     minus.u * (minus.s.asDiagonal() * (minus.v.transpose() * dst.v))) /
                    (2.0 * h);
  const Matrix ztu = (plus.v * (plus.s.asDiagonal() * (plus.u.transpose() * dst.u)) -
                      minus.v * (minus.s.asDiagonal() * (minus.u.transpose() * dst.u))) /
                     (2.0 * h);
  Tangent t;
  t.base = dst;
  t.mid = xi_norm * (dst.u.transpose() * zv);
  t.up = xi_norm * zv - dst.u * t.mid;
  t.vp = xi_norm * ztu - dst.v * t.mid.transpose();
  return t;
}

Tangent Manifold::transport_diff(const Point& x, const Tangent& eta, const Tangent& xi,
                                 const Point& dst) const {
  require(same_point(eta.base, x) && same_point(xi.base, x),
          "Manifold::transport_diff: tangents are not based at the given point");
  if (is_zero_tangent(eta)) {
    Tangent t = xi;
    t.base = dst;
    return t;
  }
  Tangent t;
  t.base = dst;
  switch (kind_) {
    case Kind::Sphere: {
      const Matrix v = x.m + eta.m;
      const double w = v.norm();
      const double c = (dst.m.transpose() * xi.m)(0, 0);
      t.m = (xi.m - c * dst.m) / w;
      break;
    }
    case Kind::Oblique: {
      t.m = xi.m;
      for (Index j = 0; j < cols_; ++j) {
        const double w = (x.m.col(j) + eta.m.col(j)).norm();
        const double c = dst.m.col(j).dot(xi.m.col(j));
        t.m.col(j) = (xi.m.col(j) - c * dst.m.col(j)) / w;
      }
      break;
    }
    case Kind::Stiefel: {
      // Derivative of the qf retraction at y = x + eta along xi.
      Matrix q, r;
      thin_qr_pos(x.m + eta.m, q, r);
      const Matrix rt = r.transpose();
      const Matrix xir =
          rt.triangularView<Eigen::Lower>().solve(xi.m.transpose()).transpose();  // xi * r^{-1}
      const Matrix w = q.transpose() * xir;
      t.m = q * rho_skew(w) + xir - q * w;
      break;
    }
    case Kind::FixedRank:
      t = transport_diff_fixed_rank(x, eta, xi, dst);
      break;
  }
  return t;
}

Tangent Manifold::transport_diff(const Point& x, const Tangent& eta, const Tangent& xi) const {
  return transport_diff(x, eta, xi, retract(x, eta));
}

ScaledTransport Manifold::transport_scaled(const Point& x, const Tangent& eta, const Tangent& xi,
                                           const Point& dst) const {
  ScaledTransport out;
  out.vector = transport_diff(x, eta, xi, dst);
  out.scale = 1.0;
  const double eta_norm = norm(x, eta);
  if (eta_norm == 0.0) return out;
  const double t_norm = norm(dst, out.vector);
  if (t_norm == 0.0 || t_norm <= eta_norm) return out;
  out.scale = eta_norm / t_norm;
  out.vector = scaled(out.vector, out.scale);
  return out;
}

ScaledTransport Manifold::transport_scaled(const Point& x, const Tangent& eta,
                                           const Tangent& xi) const {
  return transport_scaled(x, eta, xi, retract(x, eta));
}

Point Manifold::random_point(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  switch (kind_) {
    case Kind::Sphere:
    case Kind::Oblique: {
      Point p;
      p.m = gaussian(rows_, cols_, rng);
      return retract_dense(p.m);
    }
    case Kind::Stiefel: {
      Matrix q, r;
      thin_qr_pos(gaussian(rows_, cols_, rng), q, r);
      Point p;
      p.m = q;
      return p;
    }
    case Kind::FixedRank: {
      const Matrix a = gaussian(rows_, cols_, rng);
      Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
      Point p;
      p.u = svd.matrixU().leftCols(rank_);
      p.s = svd.singularValues().head(rank_);
      p.v = svd.matrixV().leftCols(rank_);
      return p;
    }
  }
  throw std::logic_error("unreachable");
}

Tangent Manifold::random_tangent(const Point& x, std::uint64_t seed) const {
  std::mt19937_64 rng(mix_seed(seed, 0x7459f1a2c0ffee11ull));
  return project(x, gaussian(rows_, cols_, rng));
}

Tangent Manifold::zero_tangent(const Point& x) const {
  Tangent t;
  t.base = x;
  if (kind_ == Kind::FixedRank) {
    t.mid = Matrix::Zero(rank_, rank_);
    t.up = Matrix::Zero(rows_, rank_);
    t.vp = Matrix::Zero(cols_, rank_);
  } else {
    t.m = Matrix::Zero(rows_, cols_);
  }
  return t;
}

Matrix Manifold::dense(const Point& x) const {
  if (kind_ == Kind::FixedRank) return x.u * x.s.asDiagonal() * x.v.transpose();
  return x.m;
}

Matrix Manifold::dense(const Tangent& t) const {
  if (kind_ == Kind::FixedRank) {
    return t.base.u * t.mid * t.base.v.transpose() + t.up * t.base.v.transpose() +
           t.base.u * t.vp.transpose();
  }
  return t.m;
}

bool Manifold::is_point(const Point& x) const {
  switch (kind_) {
    case Kind::Sphere:
      return x.m.rows() == rows_ && x.m.cols() == 1 && std::abs(x.m.norm() - 1.0) <= 1e-12;
    case Kind::Stiefel: {
      if (x.m.rows() != rows_ || x.m.cols() != cols_) return false;
      const Matrix g = x.m.transpose() * x.m - Matrix::Identity(cols_, cols_);
      return g.norm() <= 1e-10;
    }
    case Kind::Oblique: {
      if (x.m.rows() != rows_ || x.m.cols() != cols_) return false;
      for (Index j = 0; j < cols_; ++j)
        if (std::abs(x.m.col(j).squaredNorm() - 1.0) > 1e-10) return false;
      return true;
    }
    case Kind::FixedRank: {
      if (x.u.rows() != rows_ || x.u.cols() != rank_ || x.v.rows() != cols_ ||
          x.v.cols() != rank_ || x.s.size() != rank_)
        return false;
      const Matrix gu = x.u.transpose() * x.u - Matrix::Identity(rank_, rank_);
      const Matrix gv = x.v.transpose() * x.v - Matrix::Identity(rank_, rank_);
      return gu.norm() <= 1e-10 && gv.norm() <= 1e-10 && (x.s.array() > 0.0).all();
    }
  }
  return false;
}

bool Manifold::is_tangent(const Point& x, const Tangent& t, double tol) const {
  if (!same_point(t.base, x)) return false;
  const Matrix td = dense(t);
  const Matrix pd = dense(project(x, td));
  return (pd - td).norm() <= tol * std::max(1.0, td.norm());
}

Tangent scaled(const Tangent& t, double a) {
  Tangent r = t;
  if (r.m.size() > 0) r.m *= a;
  if (r.mid.size() > 0) {
    r.mid *= a;
    r.up *= a;
    r.vp *= a;
  }
  return r;
}

Tangent add(const Tangent& a, const Tangent& b) {
  require(same_point(a.base, b.base), "tangent add: mismatched base points");
  Tangent r = a;
  if (r.m.size() > 0) r.m += b.m;
  if (r.mid.size() > 0) {
    r.mid += b.mid;
    r.up += b.up;
    r.vp += b.vp;
  }
  return r;
}

Tangent axpy(double a, const Tangent& x, const Tangent& y) { return add(scaled(x, a), y); }

bool is_zero_tangent(const Tangent& t) {
  const bool m0 = t.m.size() == 0 || (t.m.array() == 0.0).all();
  const bool s0 = t.mid.size() == 0 ||
                  ((t.mid.array() == 0.0).all() && (t.up.array() == 0.0).all() &&
                   (t.vp.array() == 0.0).all());
  return m0 && s0;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull + b * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace rcg
