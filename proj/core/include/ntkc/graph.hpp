#pragma once

#include "ntkc/kernels.hpp"
#include "ntkc/tensorio.hpp"

#include <Eigen/SparseCore>

#include <filesystem>
#include <vector>

namespace ntkc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Symmetric nonnegative M×M affinity with an explicit sparsity pattern, no
/// diagonal entries, and strictly positive degrees.
class SparseAffinity {
 public:
  SparseAffinity() = default;

  /// Validates symmetry (exact), nonnegativity, empty diagonal, positive degrees.
  static SparseAffinity from_matrix(SparseMatrix matrix);

  Index size() const { return matrix_.rows(); }
  Index nnz() const { return matrix_.nonZeros(); }
  Index max_row_nnz() const;
  const SparseMatrix& matrix() const { return matrix_; }
  const Vector& degrees() const { return degrees_; }
  Matrix to_dense() const { return Matrix(matrix_); }

 private:
  SparseMatrix matrix_;
  Vector degrees_;
};

/// D^{-1/2} A D^{-1/2} on the same pattern as its source.
class NormalizedAffinity {
 public:
  NormalizedAffinity() = default;
  explicit NormalizedAffinity(SparseMatrix matrix) : matrix_(std::move(matrix)) {}

  Index size() const { return matrix_.rows(); }
  const SparseMatrix& matrix() const { return matrix_; }
  Matrix to_dense() const { return Matrix(matrix_); }

 private:
  SparseMatrix matrix_;
};

/// Ranked top-q neighbor lists, q per row, best first.
struct NeighborLists {
  Index size = 0;
  Index q = 0;
  std::vector<Index> index;  // size·q
  std::vector<double> value; // kernel value of each listed neighbor
};

/// Top-q of `row` (i's kernel values against every sample), excluding i.
/// Ranking is by descending value, ties broken by ascending index.
void select_top_q(const Eigen::Ref<const Eigen::RowVectorXd>& row, Index i, Index q,
                  Index* out_index, double* out_value);

/// Keeps (i,j) iff each is in the other's list, weighted by the value in the
/// lower-indexed row's list. Non-positive weights are dropped. A row left
/// empty is joined to its best-ranked neighbor; throws InvariantError if that
/// value is not positive either.
SparseAffinity mutual_affinity(const NeighborLists& lists);

/// Mutual q-NN affinity of the kernel over `feats`. `anchors` is required iff
/// spec.kind is ntk. Requires 1 ≤ q < M.
SparseAffinity build_affinity(const Matrix& feats, const KernelSpec& spec,
                              const Matrix* anchors, Index q);
SparseAffinity build_affinity(const FeatureMatrix& feats, const KernelSpec& spec,
                              const Matrix* anchors, Index q);

/// Same construction from a precomputed dense kernel matrix.
SparseAffinity affinity_from_kernel_matrix(const Matrix& kernel, Index q);

NormalizedAffinity normalize(const SparseAffinity& a);

/// I - D^{-1/2} A D^{-1/2}.
SparseMatrix laplacian(const SparseAffinity& a);

/// Text dump: header "M nnz" then one "i j w" line per stored entry.
void write_affinity_text(const std::filesystem::path& path, const SparseMatrix& a);
void write_affinity_text(const std::filesystem::path& path, const Matrix& a);

}  // namespace ntkc
