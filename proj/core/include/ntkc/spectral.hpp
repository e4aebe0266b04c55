#pragma once

#include "ntkc/eigensolver.hpp"
#include "ntkc/graph.hpp"
#include "ntkc/tensorio.hpp"

#include <cstdint>

namespace ntkc {

/// K eigenvectors of L = I − D^{-1/2} A D^{-1/2} with the smallest eigenvalues.
struct SpectralEmbedding {
  Matrix Y;            // M×K, orthonormal columns
  Vector eigenvalues;  // of L, ascending
};

struct KMeansConfig {
  int K = 2;
  int n_init = 10;
  int max_iter = 300;
  std::uint64_t seed = 0;
  double tol = 1e-6;

  /// Throws ConfigError unless K ≥ 2 and the other knobs are positive.
  void validate() const;
};

struct KMeansResult {
  LabelVector labels;
  Matrix centers;  // K×dim
  double inertia = 0.0;
  int best_restart = 0;
};

/// k-means++ seeding and Lloyd iterations, n_init restarts; keeps the restart
/// with the lowest within-cluster sum of squares (earliest restart on ties).
/// Restart r draws from a generator seeded by (seed, r), so the result does
/// not depend on the worker count. Throws InvariantError when the points
/// have fewer than K distinct rows.
KMeansResult kmeans_fit(const Matrix& points, const KMeansConfig& cfg);
LabelVector kmeans(const Matrix& points, const KMeansConfig& cfg);

struct SpectralConfig {
  KMeansConfig kmeans;
  bool row_normalize = true;  // unit-normalize embedding rows before k-means
  EigenSolverConfig eigen;
};

struct ClusterResult {
  LabelVector labels;
  SpectralEmbedding embedding;
};

/// Requires a symmetric nonnegative affinity with positive degrees and K < M.
/// Columns of Y are sign-fixed so their largest-magnitude entry is positive.
SpectralEmbedding spectral_embed(const Matrix& affinity, Index K,
                                 const EigenSolverConfig& cfg = {});
SpectralEmbedding spectral_embed(const SparseMatrix& affinity, Index K,
                                 const EigenSolverConfig& cfg = {});
SpectralEmbedding spectral_embed(const SparseAffinity& affinity, Index K,
                                 const EigenSolverConfig& cfg = {});

/// spectral_embed, optional row normalization, then k-means with cfg.kmeans.K.
ClusterResult spectral_cluster(const Matrix& affinity, const SpectralConfig& cfg);
ClusterResult spectral_cluster(const SparseMatrix& affinity, const SpectralConfig& cfg);
ClusterResult spectral_cluster(const SparseAffinity& affinity, const SpectralConfig& cfg);

}  // namespace ntkc
