#include "ntkc/kernels.hpp"

#include "ntkc/error.hpp"
#include "ntkc/parallel.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace ntkc {
namespace {

constexpr std::array<std::pair<KernelKind, std::string_view>, 7> kKernelNames{{
    {KernelKind::linear, "linear"},
    {KernelKind::polynomial, "polynomial"},
    {KernelKind::rbf, "rbf"},
    {KernelKind::exponential, "exponential"},
    {KernelKind::laplacian, "laplacian"},
    {KernelKind::sigmoid, "sigmoid"},
    {KernelKind::ntk, "ntk"},
}};

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw InvariantError("temperature must be positive, got " + std::to_string(tau));
}

void check_dims(Index a, Index b, const char* what) {
  if (a != b)
    throw InvariantError(std::string("dimension mismatch for ") + what + ": " +
                         std::to_string(a) + " vs " + std::to_string(b));
}

// softmax over anchors·z / tau for a single input.
Vector softmax_row(const VectorRef& z, const Matrix& anchors, double tau) {
  Vector logits = anchors * z / tau;
  logits.array() -= logits.maxCoeff();
  Vector s = logits.array().exp();
  return s / s.sum();
}

}  // namespace

std::string_view to_string(KernelKind kind) {
  for (const auto& [k, name] : kKernelNames)
    if (k == kind) return name;
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  for (const auto& [k, n] : kKernelNames)
    if (n == name) return k;
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

double KernelSpec::resolved_gamma(Index dim) const {
  return gamma ? *gamma : 1.0 / static_cast<double>(dim);
}

void KernelSpec::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw ConfigError("kernel temperature must be positive");
  if (gamma && !(*gamma > 0.0)) throw ConfigError("kernel gamma must be positive");
  if (poly_degree < 1) throw ConfigError("polynomial degree must be at least 1");
}

Matrix softmax_scores(const Matrix& feats, const Matrix& anchors, double tau) {
  check_tau(tau);
  check_dims(feats.cols(), anchors.cols(), "softmax_scores");
  Matrix logits = feats * anchors.transpose() / tau;
  for (Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return logits;
}

double ntk_value(const VectorRef& zi, const VectorRef& zj, const Matrix& anchors, double tau) {
  check_tau(tau);
  check_dims(zi.size(), anchors.cols(), "ntk_value");
  check_dims(zj.size(), anchors.cols(), "ntk_value");
  const double visual = zi.dot(zj);
  const double semantic = softmax_row(zi, anchors, tau).dot(softmax_row(zj, anchors, tau));
  return visual * semantic / (tau * tau);
}

double log_sum_exp(const VectorRef& z, const Matrix& anchors, double tau) {
  check_tau(tau);
  check_dims(z.size(), anchors.cols(), "log_sum_exp");
  double peak = -std::numeric_limits<double>::infinity();
  for (Index k = 0; k < anchors.rows(); ++k) peak = std::max(peak, anchors.row(k).dot(z) / tau);
  double acc = 0.0;
  for (Index k = 0; k < anchors.rows(); ++k) acc += std::exp(anchors.row(k).dot(z) / tau - peak);
  return peak + std::log(acc);
}

Vector log_sum_exp_gradient(const VectorRef& z, const Matrix& anchors, double tau) {
  const double g = log_sum_exp(z, anchors, tau);
  const Index n = anchors.rows();
  const Index d = anchors.cols();
  Vector grad(n * d);
  for (Index k = 0; k < n; ++k) {
    const double weight = std::exp(anchors.row(k).dot(z) / tau - g);
    grad.segment(k * d, d) = weight * z / tau;
  }
  return grad;
}

double ntk_oracle(const VectorRef& zi, const VectorRef& zj, const Matrix& anchors, double tau) {
  check_dims(zj.size(), anchors.cols(), "ntk_oracle");
  return log_sum_exp_gradient(zi, anchors, tau).dot(log_sum_exp_gradient(zj, anchors, tau));
}

double kernel_value(const KernelSpec& spec, const VectorRef& zi, const VectorRef& zj,
                    const Matrix* anchors) {
  check_dims(zi.size(), zj.size(), "kernel_value");
  const double gamma = spec.resolved_gamma(zi.size());
  switch (spec.kind) {
    case KernelKind::linear:
      return zi.dot(zj);
    case KernelKind::polynomial:
      return std::pow(gamma * zi.dot(zj) + spec.poly_coef0, spec.poly_degree);
    case KernelKind::rbf:
      return std::exp(-(zi - zj).squaredNorm() / spec.temperature);
    case KernelKind::exponential:
      return std::exp(zi.dot(zj) / spec.temperature);
    case KernelKind::laplacian:
      return std::exp(-(zi - zj).lpNorm<1>() * gamma);
    case KernelKind::sigmoid:
      return std::tanh(gamma * zi.dot(zj) + spec.sigmoid_coef0);
    case KernelKind::ntk:
      if (anchors == nullptr) throw InvariantError("ntk kernel requires anchors");
      return ntk_value(zi, zj, *anchors, spec.temperature);
  }
  throw InvariantError("unhandled kernel kind");
}

PairwiseKernel::PairwiseKernel(const Matrix& feats, KernelSpec spec, const Matrix* anchors)
    : feats_(feats), spec_(spec), gamma_(spec.resolved_gamma(feats.cols())) {
  spec_.validate();
  if (spec_.kind == KernelKind::ntk) {
    if (anchors == nullptr) throw InvariantError("ntk kernel requires anchors");
    scores_ = softmax_scores(feats_, *anchors, spec_.temperature);
  }
  if (spec_.kind == KernelKind::rbf) sq_norms_ = feats_.rowwise().squaredNorm();
}

Matrix PairwiseKernel::block(Index begin, Index end) const {
  const Index rows = end - begin;
  const auto fb = feats_.middleRows(begin, rows);
  const double tau = spec_.temperature;

  if (spec_.kind == KernelKind::laplacian) {
    Matrix out(rows, feats_.rows());
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < feats_.rows(); ++j)
        out(i, j) = std::exp(-(fb.row(i) - feats_.row(j)).lpNorm<1>() * gamma_);
    return out;
  }

  Matrix gram = fb * feats_.transpose();
  switch (spec_.kind) {
    case KernelKind::linear:
      break;
    case KernelKind::polynomial: {
      const double c = spec_.poly_coef0;
      const int deg = spec_.poly_degree;
      gram = gram.unaryExpr([&](double u) { return std::pow(gamma_ * u + c, deg); });
      break;
    }
    case KernelKind::rbf:
      for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < gram.cols(); ++j) {
          const double dist2 = std::max(0.0, sq_norms_(begin + i) + sq_norms_(j) - 2.0 * gram(i, j));
          gram(i, j) = std::exp(-dist2 / tau);
        }
      break;
    case KernelKind::exponential:
      gram = (gram.array() / tau).exp().matrix();
      break;
    case KernelKind::sigmoid:
      gram = (gamma_ * gram.array() + spec_.sigmoid_coef0).tanh().matrix();
      break;
    case KernelKind::ntk: {
      const Matrix overlap = scores_.middleRows(begin, rows) * scores_.transpose();
      gram = (gram.array() * overlap.array() / (tau * tau)).matrix();
      break;
    }
    case KernelKind::laplacian:
      break;
  }
  return gram;
}

Matrix PairwiseKernel::full() const {
  const Index m = size();
  Matrix out(m, m);
  parallel_for(row_block_count(m), [&](std::size_t b) {
    const Index begin = static_cast<Index>(b) * kRowBlock;
    const Index end = std::min(m, begin + kRowBlock);
    out.middleRows(begin, end - begin) = block(begin, end);
  });
  return out;
}

}  // namespace ntkc
