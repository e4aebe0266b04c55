#include "ntkc/rad.hpp"

#include "ntkc/error.hpp"
#include "ntkc/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ntkc {
namespace {

void check_beta(const Vector& beta, std::size_t prompts) {
  if (beta.size() != static_cast<Index>(prompts))
    throw InvariantError("beta has " + std::to_string(beta.size()) + " entries for " +
                         std::to_string(prompts) + " prompts");
  if ((beta.array() < 0.0).any() || std::abs(beta.sum() - 1.0) > 1e-9)
    throw InvariantError("beta is not on the probability simplex");
}

void check_sizes(const std::vector<NormalizedAffinity>& S, Index m, const SparseMatrix& E) {
  if (S.empty()) throw InvariantError("at least one affinity is required");
  for (const auto& s : S)
    if (s.size() != m) throw InvariantError("affinity sizes differ");
  if (E.rows() != m || E.cols() != m) throw InvariantError("reference matrix has wrong size");
}

void check_finite(const Matrix& a) {
  if (!a.allFinite()) throw NumericError("diffusion produced non-finite values");
}

// S Â S for dense Â, row block by row block.
Matrix sandwich(const SparseMatrix& s, const Matrix& a) {
  const Index m = a.rows();
  Matrix out(m, m);
  parallel_for(row_block_count(m), [&](std::size_t b) {
    const Index begin = static_cast<Index>(b) * kRowBlock;
    const Index rows = std::min(m, begin + kRowBlock) - begin;
    const Matrix left = s.middleRows(begin, rows) * a;
    out.middleRows(begin, rows) = left * s;
  });
  return out;
}

// (S Â S)(i,j) for every stored (i,j) of the pattern-restricted Â, aligned
// with a.valuePtr(). Â is zero off its pattern.
std::vector<double> restricted_sandwich(const SparseMatrix& a, const SparseMatrix& s) {
  const Index m = a.rows();
  std::vector<double> out(static_cast<std::size_t>(a.nonZeros()));
  parallel_for(row_block_count(m), [&](std::size_t b) {
    const Index begin = static_cast<Index>(b) * kRowBlock;
    const Index end = std::min(m, begin + kRowBlock);
    Vector work = Vector::Zero(m);  // row i of S Â
    std::vector<Index> touched;
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    for (Index i = begin; i < end; ++i) {
      for (SparseMatrix::InnerIterator sk(s, i); sk; ++sk)
        for (SparseMatrix::InnerIterator al(a, sk.col()); al; ++al) {
          if (!seen[static_cast<std::size_t>(al.col())]) {
            seen[static_cast<std::size_t>(al.col())] = 1;
            touched.push_back(al.col());
          }
          work(al.col()) += sk.value() * al.value();
        }
      for (Index p = a.outerIndexPtr()[i]; p < a.outerIndexPtr()[i + 1]; ++p) {
        const Index j = a.innerIndexPtr()[p];
        double acc = 0.0;
        for (SparseMatrix::InnerIterator sl(s, j); sl; ++sl) acc += work(sl.col()) * sl.value();
        out[static_cast<std::size_t>(p)] = acc;
      }
      for (Index c : touched) {
        work(c) = 0.0;
        seen[static_cast<std::size_t>(c)] = 0;
      }
      touched.clear();
    }
  });
  return out;
}

// Values of E at the stored positions of `pattern`; throws if E has an entry
// the pattern lacks.
std::vector<double> aligned_values(const SparseMatrix& pattern, const SparseMatrix& e) {
  std::vector<double> out(static_cast<std::size_t>(pattern.nonZeros()), 0.0);
  for (Index i = 0; i < e.outerSize(); ++i) {
    Index p = pattern.outerIndexPtr()[i];
    const Index end = pattern.outerIndexPtr()[i + 1];
    for (SparseMatrix::InnerIterator it(e, i); it; ++it) {
      while (p < end && pattern.innerIndexPtr()[p] < it.col()) ++p;
      if (p == end || pattern.innerIndexPtr()[p] != it.col())
        throw InvariantError("reference matrix has entries outside the diffusion pattern");
      out[static_cast<std::size_t>(p)] = it.value();
    }
  }
  return out;
}

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

SparseMatrix symmetrized(const SparseMatrix& a) {
  SparseMatrix t = a.transpose();
  SparseMatrix s = 0.5 * (a + t);
  s.makeCompressed();
  return s;
}

double frobenius_sq(const SparseMatrix& a) {
  return Eigen::Map<const Vector>(a.valuePtr(), a.nonZeros()).squaredNorm();
}

double reference_gap_sq(const Matrix& a, const SparseMatrix& e) {
  return (a - Matrix(e)).squaredNorm();
}

double reference_gap_sq(const SparseMatrix& a, const SparseMatrix& e) {
  SparseMatrix diff = a - e;
  return frobenius_sq(diff);
}

template <class Store>
Vector losses(const Store& a, const std::vector<NormalizedAffinity>& S) {
  Vector h(static_cast<Index>(S.size()));
  for (std::size_t b = 0; b < S.size(); ++b) h(static_cast<Index>(b)) = diffusion_loss(a, S[b]);
  return h;
}

}  // namespace

void RadConfig::validate() const {
  if (!(mu > 0.0)) throw ConfigError("mu must be positive");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (max_outer < 1 || max_inner < 1) throw ConfigError("iteration caps must be positive");
  if (!(inner_tol > 0.0) || !(outer_tol > 0.0)) throw ConfigError("tolerances must be positive");
}

SparseMatrix identity_reference(Index m) {
  SparseMatrix e(m, m);
  e.setIdentity();
  return e;
}

double diffusion_loss(const Matrix& A_hat, const NormalizedAffinity& S) {
  if (A_hat.rows() != S.size() || A_hat.cols() != S.size())
    throw InvariantError("diffusion_loss: size mismatch");
  return A_hat.squaredNorm() - A_hat.cwiseProduct(sandwich(S.matrix(), A_hat)).sum();
}

double diffusion_loss(const SparseMatrix& A_hat, const NormalizedAffinity& S) {
  if (A_hat.rows() != S.size() || A_hat.cols() != S.size())
    throw InvariantError("diffusion_loss: size mismatch");
  const std::vector<double> y = restricted_sandwich(A_hat, S.matrix());
  double inner = 0.0;
  for (std::size_t p = 0; p < y.size(); ++p) inner += A_hat.valuePtr()[p] * y[p];
  return frobenius_sq(A_hat) - inner;
}

double rad_objective(const Vector& H, const Vector& beta, double reference_gap_sq, double mu,
                     double lambda) {
  return beta.dot(H) + mu * reference_gap_sq + 0.5 * lambda * beta.squaredNorm();
}

Matrix diffusion_step(const Matrix& A_hat, const std::vector<NormalizedAffinity>& S,
                      const Vector& beta, const SparseMatrix& E, double mu) {
  Matrix next = (mu / (mu + 1.0)) * Matrix(E);
  for (std::size_t b = 0; b < S.size(); ++b) {
    const double c = beta(static_cast<Index>(b)) / (mu + 1.0);
    if (c == 0.0) continue;
    next += c * sandwich(S[b].matrix(), A_hat);
  }
  return next;
}

Matrix update_affinity(const Matrix& initial, const std::vector<NormalizedAffinity>& S,
                       const Vector& beta, const SparseMatrix& E, const RadConfig& cfg) {
  cfg.validate();
  check_sizes(S, initial.rows(), E);
  check_beta(beta, S.size());
  Matrix current = initial;
  for (int step = 0; step < cfg.max_inner; ++step) {
    Matrix next = symmetrized(diffusion_step(current, S, beta, E, cfg.mu));
    check_finite(next);
    const double change = (next - current).norm();
    const double scale = next.norm();
    current = std::move(next);
    if (change <= cfg.inner_tol * scale) break;
  }
  return current;
}

SparseMatrix diffusion_pattern(const std::vector<NormalizedAffinity>& S) {
  if (S.empty()) throw InvariantError("at least one affinity is required");
  const Index m = S.front().size();
  SparseMatrix pattern = identity_reference(m);
  for (const auto& s : S) {
    SparseMatrix ones = s.matrix();
    for (Index k = 0; k < ones.nonZeros(); ++k) ones.valuePtr()[k] = 1.0;
    pattern += ones;
  }
  for (Index k = 0; k < pattern.nonZeros(); ++k) pattern.valuePtr()[k] = 0.0;
  pattern.makeCompressed();
  return pattern;
}

SparseMatrix update_affinity(const SparseMatrix& initial,
                             const std::vector<NormalizedAffinity>& S, const Vector& beta,
                             const SparseMatrix& E, const RadConfig& cfg) {
  cfg.validate();
  check_sizes(S, initial.rows(), E);
  check_beta(beta, S.size());
  SparseMatrix current = initial;
  current.makeCompressed();
  const std::vector<double> e_values = aligned_values(current, E);
  const double keep = cfg.mu / (cfg.mu + 1.0);

  for (int step = 0; step < cfg.max_inner; ++step) {
    SparseMatrix next = current;
    Eigen::Map<Vector> values(next.valuePtr(), next.nonZeros());
    values = keep * Eigen::Map<const Vector>(e_values.data(), static_cast<Index>(e_values.size()));
    for (std::size_t b = 0; b < S.size(); ++b) {
      const double c = beta(static_cast<Index>(b)) / (cfg.mu + 1.0);
      if (c == 0.0) continue;
      const std::vector<double> y = restricted_sandwich(current, S[b].matrix());
      values += c * Eigen::Map<const Vector>(y.data(), static_cast<Index>(y.size()));
    }
    if (!values.allFinite()) throw NumericError("diffusion produced non-finite values");
    // transpose-average keeps the pattern because the pattern is symmetric
    next = symmetrized(next);
    SparseMatrix diff = next - current;
    const double change = std::sqrt(frobenius_sq(diff));
    const double scale = std::sqrt(frobenius_sq(next));
    current = std::move(next);
    if (change <= cfg.inner_tol * scale) break;
  }
  return current;
}

Matrix closed_form_affinity(const std::vector<NormalizedAffinity>& S, const Vector& beta,
                            const SparseMatrix& E, double mu) {
  if (S.empty()) throw InvariantError("at least one affinity is required");
  const Index m = S.front().size();
  if (m > 64) throw InvariantError("closed_form_affinity is limited to M <= 64");
  check_sizes(S, m, E);
  check_beta(beta, S.size());
  if (!(mu > 0.0)) throw InvariantError("mu must be positive");

  const Index n = m * m;
  Matrix system = Matrix::Identity(n, n);
  for (std::size_t b = 0; b < S.size(); ++b) {
    const double c = beta(static_cast<Index>(b)) / (mu + 1.0);
    const Matrix s = S[b].to_dense();
    for (Index p = 0; p < m; ++p)
      for (Index q = 0; q < m; ++q)
        system.block(p * m, q * m, m, m) -= (c * s(p, q)) * s;
  }
  const Matrix e = Matrix(E);
  const Vector rhs = Eigen::Map<const Vector>(e.data(), n);
  const Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) throw NumericError("closed-form diffusion system is singular");
  const Vector x = lu.solve(rhs);
  return (mu / (mu + 1.0)) * Eigen::Map<const Matrix>(x.data(), m, m);
}

double diffusion_operator_radius(const std::vector<NormalizedAffinity>& S, const Vector& beta,
                                 double mu) {
  if (S.empty()) throw InvariantError("at least one affinity is required");
  const Index m = S.front().size();
  if (m > 16) throw InvariantError("diffusion_operator_radius is limited to M <= 16");
  const Index n = m * m;
  Matrix op = Matrix::Zero(n, n);
  for (std::size_t b = 0; b < S.size(); ++b) {
    const double c = beta(static_cast<Index>(b)) / (mu + 1.0);
    const Matrix s = S[b].to_dense();
    for (Index p = 0; p < m; ++p)
      for (Index q = 0; q < m; ++q) op.block(p * m, q * m, m, m) += (c * s(p, q)) * s;
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(op, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Vector update_weights(const Vector& H, double lambda) {
  const Index count = H.size();
  if (count == 0) throw InvariantError("update_weights needs at least one loss");
  if (!H.allFinite()) throw NumericError("update_weights: non-finite loss");
  if (!(lambda > 0.0)) throw InvariantError("lambda must be positive");

  std::vector<Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return H(a) < H(b); });

  // Largest prefix of the ascending losses satisfying
  // H_(k) < (Σ_{first k} H + λ) / k.
  Index valid = 0;
  double valid_sum = 0.0;
  double prefix = 0.0;
  for (Index k = 1; k <= count; ++k) {
    prefix += H(order[static_cast<std::size_t>(k - 1)]);
    if (H(order[static_cast<std::size_t>(k - 1)]) < (prefix + lambda) / static_cast<double>(k)) {
      valid = k;
      valid_sum = prefix;
    }
  }
  if (valid == 0) throw NumericError("update_weights: empty valid set");

  Vector beta = Vector::Zero(count);
  const double k = static_cast<double>(valid);
  for (Index r = 0; r < valid; ++r) {
    const Index b = order[static_cast<std::size_t>(r)];
    beta(b) = (valid_sum - k * H(b) + lambda) / (lambda * k);
  }
  return beta;
}

EnsembleState run_rad(const std::vector<SparseAffinity>& A, const SparseMatrix& E,
                      const RadConfig& cfg, const RadObserver& observer) {
  cfg.validate();
  if (A.empty()) throw InvariantError("run_rad needs at least one affinity");
  const Index m = A.front().size();
  std::vector<NormalizedAffinity> S;
  S.reserve(A.size());
  for (const auto& a : A) {
    if (a.size() != m) throw InvariantError("run_rad: affinity sizes differ");
    S.push_back(normalize(a));
  }
  check_sizes(S, m, E);

  EnsembleState state;
  state.pattern_restricted = cfg.pattern_restricted;
  state.beta = Vector::Constant(static_cast<Index>(A.size()), 1.0 / static_cast<double>(A.size()));

  double gap = 0.0;
  if (cfg.pattern_restricted) {
    SparseMatrix start = diffusion_pattern(S);
    SparseMatrix e_pattern = E;
    for (Index k = 0; k < e_pattern.nonZeros(); ++k) e_pattern.valuePtr()[k] = 0.0;
    start += e_pattern;
    start.makeCompressed();
    const std::vector<double> ev = aligned_values(start, E);
    std::copy(ev.begin(), ev.end(), start.valuePtr());
    state.A_hat_sparse = std::move(start);
    state.H = losses(state.A_hat_sparse, S);
    gap = reference_gap_sq(state.A_hat_sparse, E);
  } else {
    state.A_hat = Matrix(E);
    state.H = losses(state.A_hat, S);
    gap = reference_gap_sq(state.A_hat, E);
  }
  state.objective_trace.push_back(rad_objective(state.H, state.beta, gap, cfg.mu, cfg.lambda));
  state.beta_trace.push_back(state.beta);

  for (int t = 0; t < cfg.max_outer; ++t) {
    if (cfg.pattern_restricted) {
      state.A_hat_sparse = update_affinity(state.A_hat_sparse, S, state.beta, E, cfg);
      state.H = losses(state.A_hat_sparse, S);
      gap = reference_gap_sq(state.A_hat_sparse, E);
    } else {
      state.A_hat = update_affinity(state.A_hat, S, state.beta, E, cfg);
      state.H = losses(state.A_hat, S);
      gap = reference_gap_sq(state.A_hat, E);
    }
    state.beta = update_weights(state.H, cfg.lambda);
    const double previous = state.objective_trace.back();
    const double objective = rad_objective(state.H, state.beta, gap, cfg.mu, cfg.lambda);
    state.objective_trace.push_back(objective);
    state.beta_trace.push_back(state.beta);
    state.outer_iterations = t + 1;
    if (observer) observer(state);
    if (std::abs(previous - objective) <= cfg.outer_tol * std::abs(previous)) break;
  }
  return state;
}

SparseMatrix naive_average(const std::vector<SparseAffinity>& A) {
  if (A.empty()) throw InvariantError("naive_average needs at least one affinity");
  SparseMatrix sum = A.front().matrix();
  for (std::size_t b = 1; b < A.size(); ++b) {
    if (A[b].size() != sum.rows()) throw InvariantError("naive_average: sizes differ");
    sum += A[b].matrix();
  }
  sum *= 1.0 / static_cast<double>(A.size());
  sum.makeCompressed();
  return sum;
}

PromptEnsemble prompt_ensemble_anchors(const AnchorBank& bank) {
  bank.validate();
  PromptEnsemble out;
  out.anchors = Matrix::Zero(bank.nouns(), bank.dim());
  for (const auto& w : bank.banks) out.anchors += w.values();
  out.anchors /= static_cast<double>(bank.prompts());
  for (Index k = 0; k < out.anchors.rows(); ++k)
    if (out.anchors.row(k).norm() <= 1e-8) out.degenerate_rows.push_back(k);
  return out;
}

Matrix clip_negative(Matrix A_hat) { return A_hat.cwiseMax(0.0); }

SparseMatrix clip_negative(SparseMatrix A_hat) {
  for (Index k = 0; k < A_hat.nonZeros(); ++k)
    A_hat.valuePtr()[k] = std::max(0.0, A_hat.valuePtr()[k]);
  A_hat.prune(0.0, 0.0);
  return A_hat;
}

}  // namespace ntkc
