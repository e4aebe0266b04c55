#include "ntkc/eigensolver.hpp"

#include "ntkc/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace ntkc {
namespace {

// Fills `x` with standard normals from a portable generator.
void fill_gaussian(Eigen::Ref<Matrix> x, std::mt19937_64& rng) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  const auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i) {
      const double u1 = uniform();
      const double u2 = uniform();
      x(i, j) = std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }
}

// Orthonormalizes the columns of `block` against `basis` (first `used`
// columns) and among themselves, twice (CGS2). Columns that collapse are
// replaced with fresh random directions.
void orthonormalize(Matrix& block, const Matrix& basis, Index used, std::mt19937_64& rng) {
  const Index m = block.rows();
  for (Index c = 0; c < block.cols(); ++c) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      auto v = block.col(c);
      const double before = v.norm();
      for (int pass = 0; pass < 2; ++pass) {
        if (used > 0) v -= basis.leftCols(used) * (basis.leftCols(used).transpose() * v);
        if (c > 0) v -= block.leftCols(c) * (block.leftCols(c).transpose() * v);
      }
      const double after = v.norm();
      if (after > 1e-10 * std::max(before, 1e-300) && after > 1e-200) {
        v /= after;
        break;
      }
      if (used + c >= m) {
        v.setZero();
        break;
      }
      Matrix fresh(m, 1);
      fill_gaussian(fresh, rng);
      v = fresh.col(0);
    }
  }
}

}  // namespace

Eigenpairs largest_eigenpairs_dense(const Matrix& a, Index count) {
  if (count < 1 || count > a.rows()) throw InvariantError("invalid eigenpair count");
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  if (eig.info() != Eigen::Success) throw NumericError("dense eigensolver did not converge");
  Eigenpairs out;
  out.values = eig.eigenvalues().tail(count).reverse();
  out.vectors = eig.eigenvectors().rightCols(count).rowwise().reverse();
  return out;
}

Eigenpairs largest_eigenpairs(const SymmetricOperator& op, Index size, Index count,
                              const EigenSolverConfig& cfg) {
  if (count < 1 || count > size) throw InvariantError("invalid eigenpair count");
  const Index block = std::min(size, count + std::max<Index>(2, count / 2));
  const Index basis_cols = std::min(size, std::max<Index>(4 * block, block + 40));

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Matrix start(size, block);
  fill_gaussian(start, rng);

  Matrix basis(size, basis_cols);
  Matrix image(size, basis_cols);  // op applied to each basis column
  Eigenpairs out;

  for (int cycle = 1; cycle <= cfg.max_iter; ++cycle) {
    Index used = 0;
    Matrix next = start;
    while (used < basis_cols) {
      const Index width = std::min(next.cols(), basis_cols - used);
      Matrix chunk = next.leftCols(width);
      orthonormalize(chunk, basis, used, rng);
      basis.middleCols(used, width) = chunk;
      image.middleCols(used, width) = op(chunk);
      used += width;
      next = image.middleCols(used - width, width);
    }

    Matrix projected = basis.transpose() * image;
    projected = 0.5 * (projected + projected.transpose()).eval();
    const Eigen::SelfAdjointEigenSolver<Matrix> ritz(projected);
    if (ritz.info() != Eigen::Success) throw NumericError("Rayleigh-Ritz step failed");
    const Matrix top = ritz.eigenvectors().rightCols(block).rowwise().reverse();
    const Vector theta = ritz.eigenvalues().tail(block).reverse();

    const Matrix y = basis * top.leftCols(count);
    const Matrix residual = image * top.leftCols(count) - y * theta.head(count).asDiagonal();
    const double worst = residual.colwise().norm().maxCoeff();

    out.values = theta.head(count);
    out.vectors = y;
    out.iterations = cycle;
    if (worst <= cfg.tol || basis_cols == size) return out;
    start = basis * top;
  }
  throw NumericError("iterative eigensolver did not converge within " +
                     std::to_string(cfg.max_iter) + " restarts");
}

}  // namespace ntkc
