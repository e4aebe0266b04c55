#pragma once

#include "ntkc/tensorio.hpp"

#include <optional>
#include <string_view>

namespace ntkc {

enum class KernelKind { linear, polynomial, rbf, exponential, laplacian, sigmoid, ntk };

std::string_view to_string(KernelKind kind);
/// Throws ConfigError on an unknown name.
KernelKind parse_kernel_kind(std::string_view name);

/// Pairwise similarity used to build an affinity graph.
///
///   linear       z_i·z_j
///   polynomial   (gamma z_i·z_j + poly_coef0)^poly_degree
///   rbf          exp(-|z_i - z_j|² / temperature)
///   exponential  exp(z_i·z_j / temperature)
///   laplacian    exp(-gamma |z_i - z_j|₁)
///   sigmoid      tanh(gamma z_i·z_j + sigmoid_coef0)
///   ntk          (z_i·z_j)(s_i·s_j) / temperature², s = softmax(W z / temperature)
struct KernelSpec {
  KernelKind kind = KernelKind::ntk;
  double temperature = 0.04;
  int poly_degree = 3;
  double poly_coef0 = 1.0;
  std::optional<double> gamma;  // unset: 1/d
  double sigmoid_coef0 = 1.0;

  double resolved_gamma(Index dim) const;
  /// Throws ConfigError on non-positive temperature/gamma or degree < 1.
  void validate() const;
};

using VectorRef = Eigen::Ref<const Vector>;

/// Row i is softmax(anchors · feats_i / tau). Anchors are N×d and need not be
/// unit-norm. Row maxima are subtracted before exponentiating.
Matrix softmax_scores(const Matrix& feats, const Matrix& anchors, double tau);

/// Closed-form empirical NTK of z ↦ log Σ_k exp(w_k·z / tau) at θ₀ = vec(W).
double ntk_value(const VectorRef& zi, const VectorRef& zj, const Matrix& anchors, double tau);

/// g(z) = log Σ_k exp(w_k·z / tau).
double log_sum_exp(const VectorRef& z, const Matrix& anchors, double tau);

/// ∂g/∂vec(W) with W = [w_1 … w_N] (d×N, column-major): entries k·d … k·d+d-1
/// hold ∂g/∂w_k = s[k] z / tau.
Vector log_sum_exp_gradient(const VectorRef& z, const Matrix& anchors, double tau);

/// Inner product of the two materialized parameter gradients. Independent
/// route to ntk_value.
double ntk_oracle(const VectorRef& zi, const VectorRef& zj, const Matrix& anchors, double tau);

/// Scalar kernel evaluation. `anchors` is required for KernelKind::ntk.
double kernel_value(const KernelSpec& spec, const VectorRef& zi, const VectorRef& zj,
                    const Matrix* anchors = nullptr);

/// Batched all-pairs evaluation over one FeatureMatrix, one row block at a
/// time. Holds a reference to `feats`; it must outlive this object.
class PairwiseKernel {
 public:
  PairwiseKernel(const Matrix& feats, KernelSpec spec, const Matrix* anchors = nullptr);

  Index size() const { return feats_.rows(); }
  const KernelSpec& spec() const { return spec_; }

  /// Kernel values for rows [begin, end) against all rows.
  Matrix block(Index begin, Index end) const;

  /// All M×M values; convenience for small inputs.
  Matrix full() const;

 private:
  const Matrix& feats_;
  KernelSpec spec_;
  double gamma_ = 0.0;
  Matrix scores_;   // ntk only
  Vector sq_norms_; // rbf only
};

}  // namespace ntkc
