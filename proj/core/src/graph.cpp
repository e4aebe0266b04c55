#include "ntkc/graph.hpp"

#include "ntkc/error.hpp"
#include "ntkc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace ntkc {
namespace {

void check_q(Index q, Index m) {
  if (q < 1) throw InvariantError("q must be at least 1");
  if (q >= m)
    throw InvariantError("q = " + std::to_string(q) + " must be smaller than M = " +
                         std::to_string(m));
}

Vector row_sums(const SparseMatrix& a) {
  Vector d = Vector::Zero(a.rows());
  for (Index i = 0; i < a.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) d(i) += it.value();
  return d;
}

}  // namespace

SparseAffinity SparseAffinity::from_matrix(SparseMatrix matrix) {
  if (matrix.rows() != matrix.cols()) throw InvariantError("affinity must be square");
  matrix.makeCompressed();
  const SparseMatrix transposed = matrix.transpose();
  for (Index i = 0; i < matrix.outerSize(); ++i) {
    SparseMatrix::InnerIterator a(matrix, i);
    SparseMatrix::InnerIterator b(transposed, i);
    for (; a && b; ++a, ++b) {
      if (a.col() != b.col() || a.value() != b.value())
        throw InvariantError("affinity is not symmetric at row " + std::to_string(i));
      if (a.col() == i) throw InvariantError("affinity has a diagonal entry at " + std::to_string(i));
      if (!(a.value() >= 0.0) || !std::isfinite(a.value()))
        throw InvariantError("affinity has a negative or non-finite weight at row " +
                             std::to_string(i));
    }
    if (a || b) throw InvariantError("affinity is not symmetric at row " + std::to_string(i));
  }
  SparseAffinity out;
  out.degrees_ = row_sums(matrix);
  for (Index i = 0; i < out.degrees_.size(); ++i)
    if (!(out.degrees_(i) > 0.0))
      throw InvariantError("affinity row " + std::to_string(i) + " has zero degree");
  out.matrix_ = std::move(matrix);
  return out;
}

Index SparseAffinity::max_row_nnz() const {
  Index best = 0;
  for (Index i = 0; i < matrix_.outerSize(); ++i)
    best = std::max<Index>(best, matrix_.outerIndexPtr()[i + 1] - matrix_.outerIndexPtr()[i]);
  return best;
}

void select_top_q(const Eigen::Ref<const Eigen::RowVectorXd>& row, Index i, Index q,
                  Index* out_index, double* out_value) {
  const Index m = row.size();
  std::vector<Index> candidates;
  candidates.reserve(static_cast<std::size_t>(m - 1));
  for (Index j = 0; j < m; ++j) {
    if (j == i) continue;
    if (!std::isfinite(row(j)))
      throw NumericError("non-finite kernel value at (" + std::to_string(i) + ", " +
                         std::to_string(j) + ")");
    candidates.push_back(j);
  }
  const auto better = [&](Index a, Index b) {
    return row(a) > row(b) || (row(a) == row(b) && a < b);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + q, candidates.end(), better);
  for (Index r = 0; r < q; ++r) {
    out_index[r] = candidates[static_cast<std::size_t>(r)];
    out_value[r] = row(out_index[r]);
  }
}

SparseAffinity mutual_affinity(const NeighborLists& lists) {
  const Index m = lists.size;
  const Index q = lists.q;
  std::vector<Index> sorted(lists.index);
  for (Index i = 0; i < m; ++i)
    std::sort(sorted.begin() + i * q, sorted.begin() + (i + 1) * q);
  const auto listed = [&](Index row, Index j) {
    const auto first = sorted.begin() + row * q;
    return std::binary_search(first, first + q, j);
  };

  std::vector<std::vector<std::pair<Index, double>>> rows(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    for (Index r = 0; r < q; ++r) {
      const Index j = lists.index[static_cast<std::size_t>(i * q + r)];
      if (j <= i || !listed(j, i)) continue;
      const double w = lists.value[static_cast<std::size_t>(i * q + r)];
      if (!(w > 0.0)) continue;  // clamped to zero, then dropped
      rows[static_cast<std::size_t>(i)].emplace_back(j, w);
      rows[static_cast<std::size_t>(j)].emplace_back(i, w);
    }
  }

  for (Index i = 0; i < m; ++i) {
    if (!rows[static_cast<std::size_t>(i)].empty()) continue;
    const Index j = lists.index[static_cast<std::size_t>(i * q)];
    const double w = lists.value[static_cast<std::size_t>(i * q)];
    if (!(w > 0.0))
      throw InvariantError("row " + std::to_string(i) +
                           " has no positive-affinity neighbor after repair");
    rows[static_cast<std::size_t>(i)].emplace_back(j, w);
    rows[static_cast<std::size_t>(j)].emplace_back(i, w);
  }

  std::vector<Eigen::Triplet<double>> triplets;
  for (Index i = 0; i < m; ++i)
    for (const auto& [j, w] : rows[static_cast<std::size_t>(i)]) triplets.emplace_back(i, j, w);
  SparseMatrix a(m, m);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return SparseAffinity::from_matrix(std::move(a));
}

SparseAffinity build_affinity(const Matrix& feats, const KernelSpec& spec,
                              const Matrix* anchors, Index q) {
  const Index m = feats.rows();
  check_q(q, m);
  if (spec.kind == KernelKind::ntk && anchors == nullptr)
    throw InvariantError("ntk affinity requires anchors");
  if (anchors != nullptr && anchors->cols() != feats.cols())
    throw InvariantError("anchor dimension does not match feature dimension");

  const PairwiseKernel kernel(feats, spec, spec.kind == KernelKind::ntk ? anchors : nullptr);
  NeighborLists lists{m, q, std::vector<Index>(static_cast<std::size_t>(m * q)),
                      std::vector<double>(static_cast<std::size_t>(m * q))};
  parallel_for(row_block_count(m), [&](std::size_t b) {
    const Index begin = static_cast<Index>(b) * kRowBlock;
    const Index end = std::min(m, begin + kRowBlock);
    const Matrix values = kernel.block(begin, end);
    for (Index i = begin; i < end; ++i)
      select_top_q(values.row(i - begin), i, q, lists.index.data() + i * q,
                   lists.value.data() + i * q);
  });
  return mutual_affinity(lists);
}

SparseAffinity build_affinity(const FeatureMatrix& feats, const KernelSpec& spec,
                              const Matrix* anchors, Index q) {
  return build_affinity(feats.values(), spec, anchors, q);
}

SparseAffinity affinity_from_kernel_matrix(const Matrix& kernel, Index q) {
  if (kernel.rows() != kernel.cols()) throw InvariantError("kernel matrix must be square");
  const Index m = kernel.rows();
  check_q(q, m);
  NeighborLists lists{m, q, std::vector<Index>(static_cast<std::size_t>(m * q)),
                      std::vector<double>(static_cast<std::size_t>(m * q))};
  for (Index i = 0; i < m; ++i)
    select_top_q(kernel.row(i), i, q, lists.index.data() + i * q, lists.value.data() + i * q);
  return mutual_affinity(lists);
}

NormalizedAffinity normalize(const SparseAffinity& a) {
  const Vector& d = a.degrees();
  if (d.size() != a.size()) throw InvariantError("affinity has no degree cache");
  if ((d.array() <= 0.0).any()) throw InvariantError("cannot normalize: zero degree");
  const Vector inv_sqrt = d.array().rsqrt();
  SparseMatrix s = a.matrix();
  for (Index i = 0; i < s.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(s, i); it; ++it)
      it.valueRef() = it.value() * inv_sqrt(i) * inv_sqrt(it.col());
  return NormalizedAffinity(std::move(s));
}

SparseMatrix laplacian(const SparseAffinity& a) {
  SparseMatrix identity(a.size(), a.size());
  identity.setIdentity();
  SparseMatrix l = identity - normalize(a).matrix();
  l.makeCompressed();
  return l;
}

void write_affinity_text(const std::filesystem::path& path, const SparseMatrix& a) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  out << a.rows() << ' ' << a.nonZeros() << '\n';
  for (Index i = 0; i < a.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(a, i); it; ++it)
      out << i << ' ' << it.col() << ' ' << it.value() << '\n';
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

void write_affinity_text(const std::filesystem::path& path, const Matrix& a) {
  SparseMatrix s = a.sparseView(0.0, 0.0);
  write_affinity_text(path, s);
}

}  // namespace ntkc
