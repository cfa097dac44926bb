#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rcg/manifold.hpp"
#include "rcg/objective.hpp"

namespace rcg {

enum class ProblemKind { Rayleigh, Brockett, Completion, OffDiag };

const char* to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& name);

/// Instance sizes. Defaults match the benchmark setup: Rayleigh n=100;
/// Brockett p=5, n=20 with weights diag(1..5); Completion m=n=100, k=4 with
/// each entry observed with probability 1/2; OffDiag 10 symmetric 100x100
/// matrices and p=5.
struct ProblemDims {
  Index rayleigh_n = 100;
  Index brockett_p = 5;
  Index brockett_n = 20;
  Index completion_m = 100;
  Index completion_n = 100;
  Index completion_k = 4;
  int offdiag_count = 10;
  Index offdiag_n = 100;
  Index offdiag_p = 5;
};

/// One generated benchmark problem: the manifold plus the data matrices the
/// cost touches. Immutable after generation; cost/rgrad are pure.
struct ObjectiveInstance {
  ProblemKind kind;
  std::string id;
  std::uint64_t seed = 0;
  Manifold manifold;
  Matrix a;                                   // Rayleigh/Brockett SPD matrix, Completion target
  Vector n_weights;                           // Brockett diagonal weights
  std::vector<std::pair<Index, Index>> omega; // Completion observed entries
  Matrix mask;                                // 0/1 form of omega
  std::vector<Matrix> c;                      // OffDiag symmetric matrices
};

ObjectiveInstance make_instance(ProblemKind kind, std::uint64_t seed);
ObjectiveInstance make_instance(ProblemKind kind, std::uint64_t seed, const ProblemDims& dims);

double cost(const ObjectiveInstance& inst, const Point& x);
/// Gradient of the cost in the ambient space.
Matrix euclidean_grad(const ObjectiveInstance& inst, const Point& x);
/// Riemannian gradient: tangent projection of the ambient gradient.
Tangent rgrad(const ObjectiveInstance& inst, const Point& x);

/// Smallest eigenvalue of the instance's SPD matrix (Rayleigh optimum).
double rayleigh_min_eigenvalue(const ObjectiveInstance& inst);

/// Callback adapter consumed by the solver. Keeps a shared copy of the
/// instance alive inside the closures.
Objective make_objective(const ObjectiveInstance& inst);

/// Replayable instance document: matrices row-major, omega as an index list,
/// seed recorded.
std::string instance_to_json(const ObjectiveInstance& inst);
ObjectiveInstance instance_from_json(const std::string& text);
void save_instance(const ObjectiveInstance& inst, const std::filesystem::path& path);
ObjectiveInstance load_instance(const std::filesystem::path& path);

}  // namespace rcg
