#include "rcg/objectives.hpp"

#include <json.hpp>

#include <fstream>
#include <memory>
#include <random>
#include <stdexcept>

namespace rcg {

namespace {

using nlohmann::json;

Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = g(rng);
  return a;
}

// Well-conditioned SPD sample: A = Q diag(d) Q^T with Q orthogonal from the
// QR of a standard-normal matrix and d uniform on [1, 2].
Matrix random_spd(Index n, std::mt19937_64& rng) {
  const Matrix g = gaussian(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  std::uniform_real_distribution<double> unif(1.0, 2.0);
  Vector d(n);
  for (Index i = 0; i < n; ++i) d(i) = unif(rng);
  Matrix a = q * d.asDiagonal() * q.transpose();
  a = 0.5 * (a + a.transpose()).eval();
  return a;
}

Matrix offdiag_part(const Matrix& b) {
  Matrix e = b;
  e.diagonal().setZero();
  return e;
}

void check_manifold(const ObjectiveInstance& inst, const Point& x) {
  if (!inst.manifold.is_point(x))
    throw std::invalid_argument("objective: point is not feasible for " + inst.manifold.name());
}

json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto& data = j.at("data");
  if (static_cast<Index>(data.size()) != rows * cols)
    throw std::invalid_argument("instance json: matrix size mismatch");
  Matrix m(rows, cols);
  Index idx = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[idx++].get<double>();
  return m;
}

Manifold manifold_for(ProblemKind kind, const ProblemDims& dims) {
  switch (kind) {
    case ProblemKind::Rayleigh:
      return Manifold::sphere(dims.rayleigh_n);
    case ProblemKind::Brockett:
      return Manifold::stiefel(dims.brockett_p, dims.brockett_n);
    case ProblemKind::Completion:
      return Manifold::fixed_rank(dims.completion_m, dims.completion_n, dims.completion_k);
    case ProblemKind::OffDiag:
      return Manifold::oblique(dims.offdiag_n, dims.offdiag_p);
  }
  throw std::invalid_argument("make_instance: unknown problem kind");
}

}  // namespace

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Rayleigh:
      return "rayleigh";
    case ProblemKind::Brockett:
      return "brockett";
    case ProblemKind::Completion:
      return "completion";
    case ProblemKind::OffDiag:
      return "offdiag";
  }
  return "?";
}

ProblemKind problem_kind_from_string(const std::string& name) {
  if (name == "rayleigh") return ProblemKind::Rayleigh;
  if (name == "brockett") return ProblemKind::Brockett;
  if (name == "completion") return ProblemKind::Completion;
  if (name == "offdiag") return ProblemKind::OffDiag;
  throw std::invalid_argument("unknown problem kind: " + name);
}

ObjectiveInstance make_instance(ProblemKind kind, std::uint64_t seed) {
  return make_instance(kind, seed, ProblemDims{});
}

ObjectiveInstance make_instance(ProblemKind kind, std::uint64_t seed, const ProblemDims& dims) {
  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(kind) + 0x5eedull));
  ObjectiveInstance inst{kind, to_string(kind), seed, manifold_for(kind, dims), {}, {}, {}, {}, {}};
  switch (kind) {
    case ProblemKind::Rayleigh: {
      inst.a = random_spd(dims.rayleigh_n, rng);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(inst.a, Eigen::EigenvaluesOnly);
      if (eig.eigenvalues()(0) <= 0.0)
        throw std::logic_error("make_instance: SPD sample is not positive definite");
      break;
    }
    case ProblemKind::Brockett: {
      inst.a = random_spd(dims.brockett_n, rng);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(inst.a, Eigen::EigenvaluesOnly);
      if (eig.eigenvalues()(0) <= 0.0)
        throw std::logic_error("make_instance: SPD sample is not positive definite");
      inst.n_weights = Vector::LinSpaced(dims.brockett_p, 1.0, static_cast<double>(dims.brockett_p));
      break;
    }
    case ProblemKind::Completion: {
      inst.a = gaussian(dims.completion_m, dims.completion_n, rng);
      inst.mask = Matrix::Zero(dims.completion_m, dims.completion_n);
      std::bernoulli_distribution keep(0.5);
      for (Index i = 0; i < dims.completion_m; ++i)
        for (Index j = 0; j < dims.completion_n; ++j)
          if (keep(rng)) {
            inst.mask(i, j) = 1.0;
            inst.omega.emplace_back(i, j);
          }
      break;
    }
    case ProblemKind::OffDiag: {
      inst.c.reserve(dims.offdiag_count);
      for (int i = 0; i < dims.offdiag_count; ++i) {
        const Matrix b = gaussian(dims.offdiag_n, dims.offdiag_n, rng);
        inst.c.push_back(0.5 * (b + b.transpose()));
      }
      break;
    }
  }
  return inst;
}

double cost(const ObjectiveInstance& inst, const Point& x) {
  check_manifold(inst, x);
  switch (inst.kind) {
    case ProblemKind::Rayleigh:
      return (x.m.transpose() * inst.a * x.m)(0, 0);
    case ProblemKind::Brockett:
      return (x.m.transpose() * inst.a * x.m * inst.n_weights.asDiagonal()).trace();
    case ProblemKind::Completion: {
      const Matrix xd = inst.manifold.dense(x);
      return (inst.mask.array() * (xd - inst.a).array()).matrix().squaredNorm();
    }
    case ProblemKind::OffDiag: {
      double total = 0.0;
      for (const Matrix& ci : inst.c) {
        const Matrix b = x.m.transpose() * ci * x.m;
        total += offdiag_part(b).squaredNorm();
      }
      return total;
    }
  }
  throw std::logic_error("unreachable");
}

Matrix euclidean_grad(const ObjectiveInstance& inst, const Point& x) {
  switch (inst.kind) {
    case ProblemKind::Rayleigh:
      return 2.0 * inst.a * x.m;
    case ProblemKind::Brockett:
      return 2.0 * inst.a * x.m * inst.n_weights.asDiagonal();
    case ProblemKind::Completion: {
      const Matrix xd = inst.manifold.dense(x);
      return 2.0 * (inst.mask.array() * (xd - inst.a).array()).matrix();
    }
    case ProblemKind::OffDiag: {
      Matrix g = Matrix::Zero(x.m.rows(), x.m.cols());
      for (const Matrix& ci : inst.c) {
        const Matrix b = x.m.transpose() * ci * x.m;
        g += 4.0 * ci * x.m * offdiag_part(b);
      }
      return g;
    }
  }
  throw std::logic_error("unreachable");
}

Tangent rgrad(const ObjectiveInstance& inst, const Point& x) {
  check_manifold(inst, x);
  return inst.manifold.project(x, euclidean_grad(inst, x));
}

double rayleigh_min_eigenvalue(const ObjectiveInstance& inst) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(inst.a, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

Objective make_objective(const ObjectiveInstance& inst) {
  auto shared = std::make_shared<const ObjectiveInstance>(inst);
  return Objective{
      shared->manifold,
      [shared](const Point& x) { return cost(*shared, x); },
      [shared](const Point& x) { return rgrad(*shared, x); },
  };
}

std::string instance_to_json(const ObjectiveInstance& inst) {
  json doc;
  doc["kind"] = to_string(inst.kind);
  doc["id"] = inst.id;
  doc["seed"] = inst.seed;
  const Manifold& m = inst.manifold;
  switch (m.kind()) {
    case Manifold::Kind::Sphere:
      doc["manifold"] = {{"kind", "sphere"}, {"n", m.ambient_rows()}};
      break;
    case Manifold::Kind::Stiefel:
      doc["manifold"] = {{"kind", "stiefel"}, {"p", m.ambient_cols()}, {"n", m.ambient_rows()}};
      break;
    case Manifold::Kind::FixedRank:
      doc["manifold"] = {{"kind", "fixed_rank"},
                         {"m", m.ambient_rows()},
                         {"n", m.ambient_cols()},
                         {"k", m.rank()}};
      break;
    case Manifold::Kind::Oblique:
      doc["manifold"] = {{"kind", "oblique"}, {"n", m.ambient_rows()}, {"p", m.ambient_cols()}};
      break;
  }
  switch (inst.kind) {
    case ProblemKind::Rayleigh:
      doc["A"] = matrix_to_json(inst.a);
      break;
    case ProblemKind::Brockett: {
      doc["A"] = matrix_to_json(inst.a);
      json n = json::array();
      for (Index i = 0; i < inst.n_weights.size(); ++i) n.push_back(inst.n_weights(i));
      doc["N"] = std::move(n);
      break;
    }
    case ProblemKind::Completion: {
      doc["A"] = matrix_to_json(inst.a);
      json om = json::array();
      for (const auto& [i, j] : inst.omega) om.push_back(json::array({i, j}));
      doc["omega"] = std::move(om);
      break;
    }
    case ProblemKind::OffDiag: {
      json cs = json::array();
      for (const Matrix& ci : inst.c) cs.push_back(matrix_to_json(ci));
      doc["C"] = std::move(cs);
      break;
    }
  }
  return doc.dump();
}

ObjectiveInstance instance_from_json(const std::string& text) {
  const json doc = json::parse(text);
  const ProblemKind kind = problem_kind_from_string(doc.at("kind").get<std::string>());
  const json& mj = doc.at("manifold");
  const std::string mkind = mj.at("kind").get<std::string>();
  Manifold manifold = [&]() {
    if (mkind == "sphere") return Manifold::sphere(mj.at("n").get<Index>());
    if (mkind == "stiefel") return Manifold::stiefel(mj.at("p").get<Index>(), mj.at("n").get<Index>());
    if (mkind == "fixed_rank")
      return Manifold::fixed_rank(mj.at("m").get<Index>(), mj.at("n").get<Index>(),
                                  mj.at("k").get<Index>());
    if (mkind == "oblique") return Manifold::oblique(mj.at("n").get<Index>(), mj.at("p").get<Index>());
    throw std::invalid_argument("instance json: unknown manifold kind " + mkind);
  }();
  ObjectiveInstance inst{kind, doc.at("id").get<std::string>(), doc.at("seed").get<std::uint64_t>(),
                         manifold, {}, {}, {}, {}, {}};
  switch (kind) {
    case ProblemKind::Rayleigh:
      inst.a = matrix_from_json(doc.at("A"));
      break;
    case ProblemKind::Brockett: {
      inst.a = matrix_from_json(doc.at("A"));
      const auto& n = doc.at("N");
      inst.n_weights = Vector(n.size());
      for (std::size_t i = 0; i < n.size(); ++i) inst.n_weights(static_cast<Index>(i)) = n[i].get<double>();
      break;
    }
    case ProblemKind::Completion: {
      inst.a = matrix_from_json(doc.at("A"));
      inst.mask = Matrix::Zero(inst.a.rows(), inst.a.cols());
      for (const auto& entry : doc.at("omega")) {
        const Index i = entry.at(0).get<Index>();
        const Index j = entry.at(1).get<Index>();
        if (i < 0 || i >= inst.a.rows() || j < 0 || j >= inst.a.cols())
          throw std::invalid_argument("instance json: omega index out of range");
        inst.omega.emplace_back(i, j);
        inst.mask(i, j) = 1.0;
      }
      break;
    }
    case ProblemKind::OffDiag:
      for (const auto& cj : doc.at("C")) inst.c.push_back(matrix_from_json(cj));
      break;
  }
  return inst;
}

void save_instance(const ObjectiveInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_instance: cannot open " + path.string());
  out << instance_to_json(inst) << "\n";
}

ObjectiveInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_instance: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return instance_from_json(text);
}

}  // namespace rcg
