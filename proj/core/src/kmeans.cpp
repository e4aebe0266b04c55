#include "ntkc/error.hpp"
#include "ntkc/parallel.hpp"
#include "ntkc/spectral.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace ntkc {
namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Index count_distinct_rows(const Matrix& points, Index enough) {
  std::vector<Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  const auto less = [&](Index a, Index b) {
    for (Index c = 0; c < points.cols(); ++c) {
      if (points(a, c) < points(b, c)) return true;
      if (points(a, c) > points(b, c)) return false;
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  Index distinct = order.empty() ? 0 : 1;
  for (std::size_t r = 1; r < order.size() && distinct < enough; ++r)
    if (less(order[r - 1], order[r])) ++distinct;
  return distinct;
}

// Squared distance from every point to its nearest center, and the index.
void assign(const Matrix& points, const Matrix& centers, std::vector<int>& labels,
            Vector& dist2) {
  for (Index i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centers.rows(); ++c) {
      const double d = (points.row(i) - centers.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    dist2(i) = best_d;
  }
}

Matrix seed_plus_plus(const Matrix& points, int k, std::mt19937_64& rng) {
  const Index m = points.rows();
  Matrix centers(k, points.cols());
  Index first = static_cast<Index>(uniform01(rng) * static_cast<double>(m));
  first = std::min(first, m - 1);
  centers.row(0) = points.row(first);
  Vector closest = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    Index pick = m - 1;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (Index i = 0; i < m; ++i) {
        acc += closest(i);
        if (acc > target && closest(i) > 0.0) {
          pick = i;
          break;
        }
      }
      while (closest(pick) == 0.0 && pick > 0) --pick;
    }
    centers.row(c) = points.row(pick);
    closest = closest.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

KMeansResult lloyd(const Matrix& points, const KMeansConfig& cfg, std::mt19937_64& rng) {
  const Index m = points.rows();
  Matrix centers = seed_plus_plus(points, cfg.K, rng);
  std::vector<int> labels(static_cast<std::size_t>(m), 0);
  Vector dist2(m);
  assign(points, centers, labels, dist2);

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    Matrix next = Matrix::Zero(cfg.K, points.cols());
    std::vector<Index> sizes(static_cast<std::size_t>(cfg.K), 0);
    for (Index i = 0; i < m; ++i) {
      next.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
      ++sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < cfg.K; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) {
        next.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
        continue;
      }
      // empty cluster: take over the point farthest from its center
      Index far = 0;
      for (Index i = 1; i < m; ++i)
        if (dist2(i) > dist2(far)) far = i;
      next.row(c) = points.row(far);
      dist2(far) = 0.0;
    }
    const double shift = (next - centers).squaredNorm();
    centers = std::move(next);
    std::vector<int> previous = labels;
    assign(points, centers, labels, dist2);
    if (labels == previous && shift <= cfg.tol) break;
  }

  KMeansResult out;
  out.labels = LabelVector{std::move(labels), cfg.K};
  out.centers = std::move(centers);
  out.inertia = dist2.sum();
  return out;
}

}  // namespace

void KMeansConfig::validate() const {
  if (K < 2) throw ConfigError("K must be at least 2");
  if (n_init < 1) throw ConfigError("n_init must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be positive");
  if (!(tol > 0.0)) throw ConfigError("k-means tol must be positive");
}

KMeansResult kmeans_fit(const Matrix& points, const KMeansConfig& cfg) {
  cfg.validate();
  if (points.rows() < cfg.K)
    throw InvariantError("k-means needs at least K points");
  if (!points.allFinite()) throw InvariantError("k-means input has non-finite values");
  if (count_distinct_rows(points, cfg.K) < cfg.K)
    throw InvariantError("k-means input has fewer than K = " + std::to_string(cfg.K) +
                         " distinct points");

  std::vector<KMeansResult> runs(static_cast<std::size_t>(cfg.n_init));
  parallel_for(runs.size(), [&](std::size_t r) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(cfg.seed >> 32), static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    runs[r] = lloyd(points, cfg, rng);
    runs[r].best_restart = static_cast<int>(r);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].inertia < runs[best].inertia) best = r;
  return std::move(runs[best]);
}

LabelVector kmeans(const Matrix& points, const KMeansConfig& cfg) {
  return kmeans_fit(points, cfg).labels;
}

}  // namespace ntkc
