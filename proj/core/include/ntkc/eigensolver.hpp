#pragma once

#include "ntkc/tensorio.hpp"

#include <cstdint>
#include <functional>

namespace ntkc {

/// Computes Y = op(X) for a symmetric M×M operator, X of shape M×p.
using SymmetricOperator = std::function<Matrix(const Matrix&)>;

struct EigenSolverConfig {
  Index dense_limit = 2048;  // larger problems use the iterative solver
  double tol = 1e-8;         // residual norm per Ritz pair
  int max_iter = 300;        // restart cycles of the iterative solver
  std::uint64_t seed = 0;    // starting block
};

struct Eigenpairs {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns
  int iterations = 0;
};

/// The `count` algebraically largest eigenpairs of a symmetric operator via
/// restarted block Lanczos with full reorthogonalization. The block holds
/// more than `count` vectors, so repeated eigenvalues are resolved. Throws
/// NumericError if the residuals do not reach cfg.tol within cfg.max_iter
/// restarts.
Eigenpairs largest_eigenpairs(const SymmetricOperator& op, Index size, Index count,
                              const EigenSolverConfig& cfg);

/// Same, by dense decomposition of an explicit matrix.
Eigenpairs largest_eigenpairs_dense(const Matrix& a, Index count);

}  // namespace ntkc
