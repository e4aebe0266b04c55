#include "ntkc/spectral.hpp"

#include "ntkc/error.hpp"
#include "ntkc/parallel.hpp"

#include <cmath>

namespace ntkc {
namespace {

void check_k(Index k, Index m) {
  if (k < 1) throw InvariantError("K must be positive");
  if (k >= m)
    throw InvariantError("K = " + std::to_string(k) + " must be smaller than M = " +
                         std::to_string(m));
}

Vector inverse_sqrt_degrees(const Vector& degrees) {
  for (Index i = 0; i < degrees.size(); ++i)
    if (!(degrees(i) > 0.0) || !std::isfinite(degrees(i)))
      throw InvariantError("affinity row " + std::to_string(i) + " has non-positive degree");
  return degrees.array().rsqrt();
}

void fix_signs(Matrix& y) {
  for (Index c = 0; c < y.cols(); ++c) {
    Index best = 0;
    for (Index r = 1; r < y.rows(); ++r)
      if (std::abs(y(r, c)) > std::abs(y(best, c))) best = r;
    if (y(best, c) < 0.0) y.col(c) *= -1.0;
  }
}

SpectralEmbedding finish(Eigenpairs pairs) {
  SpectralEmbedding out;
  out.eigenvalues = (1.0 - pairs.values.array()).cwiseMax(0.0).cwiseMin(2.0);
  out.Y = std::move(pairs.vectors);
  fix_signs(out.Y);
  return out;
}

ClusterResult cluster_embedding(SpectralEmbedding embedding, const SpectralConfig& cfg) {
  Matrix points = embedding.Y;
  if (cfg.row_normalize) {
    for (Index i = 0; i < points.rows(); ++i) {
      const double n = points.row(i).norm();
      if (n > 0.0) points.row(i) /= n;
    }
  }
  ClusterResult out;
  out.labels = kmeans(points, cfg.kmeans);
  out.embedding = std::move(embedding);
  return out;
}

}  // namespace

SpectralEmbedding spectral_embed(const Matrix& affinity, Index K, const EigenSolverConfig& cfg) {
  const Index m = affinity.rows();
  if (affinity.cols() != m) throw InvariantError("affinity must be square");
  check_k(K, m);
  if ((affinity.array() < 0.0).any()) throw InvariantError("affinity has negative entries");
  const Vector inv = inverse_sqrt_degrees(affinity.rowwise().sum());
  const Matrix normalized = inv.asDiagonal() * affinity * inv.asDiagonal();
  if (m <= cfg.dense_limit) return finish(largest_eigenpairs_dense(normalized, K));
  return finish(largest_eigenpairs(
      [&](const Matrix& x) {
        Matrix y(m, x.cols());
        parallel_for(row_block_count(m), [&](std::size_t b) {
          const Index begin = static_cast<Index>(b) * kRowBlock;
          const Index rows = std::min(m, begin + kRowBlock) - begin;
          y.middleRows(begin, rows) = normalized.middleRows(begin, rows) * x;
        });
        return y;
      },
      m, K, cfg));
}

SpectralEmbedding spectral_embed(const SparseMatrix& affinity, Index K,
                                 const EigenSolverConfig& cfg) {
  const Index m = affinity.rows();
  if (affinity.cols() != m) throw InvariantError("affinity must be square");
  check_k(K, m);
  Vector degrees = Vector::Zero(m);
  for (Index i = 0; i < affinity.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(affinity, i); it; ++it) {
      if (it.value() < 0.0) throw InvariantError("affinity has negative entries");
      degrees(i) += it.value();
    }
  const Vector inv = inverse_sqrt_degrees(degrees);
  SparseMatrix normalized = affinity;
  for (Index i = 0; i < normalized.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(normalized, i); it; ++it)
      it.valueRef() *= inv(i) * inv(it.col());
  if (m <= cfg.dense_limit) return finish(largest_eigenpairs_dense(Matrix(normalized), K));
  return finish(largest_eigenpairs(
      [&](const Matrix& x) {
        Matrix y(m, x.cols());
        parallel_for(row_block_count(m), [&](std::size_t b) {
          const Index begin = static_cast<Index>(b) * kRowBlock;
          const Index rows = std::min(m, begin + kRowBlock) - begin;
          y.middleRows(begin, rows) = normalized.middleRows(begin, rows) * x;
        });
        return y;
      },
      m, K, cfg));
}

SpectralEmbedding spectral_embed(const SparseAffinity& affinity, Index K,
                                 const EigenSolverConfig& cfg) {
  return spectral_embed(affinity.matrix(), K, cfg);
}

ClusterResult spectral_cluster(const Matrix& affinity, const SpectralConfig& cfg) {
  cfg.kmeans.validate();
  return cluster_embedding(spectral_embed(affinity, cfg.kmeans.K, cfg.eigen), cfg);
}

ClusterResult spectral_cluster(const SparseMatrix& affinity, const SpectralConfig& cfg) {
  cfg.kmeans.validate();
  return cluster_embedding(spectral_embed(affinity, cfg.kmeans.K, cfg.eigen), cfg);
}

ClusterResult spectral_cluster(const SparseAffinity& affinity, const SpectralConfig& cfg) {
  return spectral_cluster(affinity.matrix(), cfg);
}

}  // namespace ntkc
