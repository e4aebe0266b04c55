#pragma once

#include "ntkc/graph.hpp"
#include "ntkc/tensorio.hpp"

#include <functional>
#include <vector>

namespace ntkc {

/// Knobs of the regularized affinity diffusion.
struct RadConfig {
  double mu = 0.1;       // pull towards the reference matrix E
  double lambda = 10.0;  // ridge on the prompt weights
  int max_outer = 50;
  int max_inner = 100;
  double inner_tol = 1e-7;
  double outer_tol = 1e-6;
  /// Keep Â supported on the union of the input patterns plus the diagonal.
  bool pattern_restricted = false;

  void validate() const;
};

/// Result of one ensembling run. Exactly one of A_hat / A_hat_sparse is
/// populated, depending on RadConfig::pattern_restricted.
struct EnsembleState {
  Matrix A_hat;
  SparseMatrix A_hat_sparse;
  bool pattern_restricted = false;
  Vector beta;                          // on the probability simplex
  Vector H;                             // per-prompt diffusion losses at the final Â
  std::vector<double> objective_trace;  // [0] is the initial objective
  std::vector<Vector> beta_trace;       // weights after each entry of objective_trace
  int outer_iterations = 0;
};

/// Identity reference matrix E = I_M.
SparseMatrix identity_reference(Index m);

/// ‖Â‖_F² − ⟨Â, S Â S⟩, i.e. vec(Â)ᵀ(I − S⊗S)vec(Â) without forming S⊗S.
double diffusion_loss(const Matrix& A_hat, const NormalizedAffinity& S);
/// Pattern-restricted variant; Â is zero off its stored pattern.
double diffusion_loss(const SparseMatrix& A_hat, const NormalizedAffinity& S);

/// Full objective Σ_b β_b H_b + μ‖Â − E‖_F² + (λ/2)‖β‖².
double rad_objective(const Vector& H, const Vector& beta, double reference_gap_sq, double mu,
                     double lambda);

/// One application of Â ↦ Σ_b β_b/(μ+1) S_b Â S_b + μ/(μ+1) E.
Matrix diffusion_step(const Matrix& A_hat, const std::vector<NormalizedAffinity>& S,
                      const Vector& beta, const SparseMatrix& E, double mu);

/// Iterates diffusion_step from `initial` until the relative Frobenius change
/// drops below cfg.inner_tol or cfg.max_inner steps ran. The result is
/// symmetrized after every step. Throws NumericError on non-finite values.
Matrix update_affinity(const Matrix& initial, const std::vector<NormalizedAffinity>& S,
                       const Vector& beta, const SparseMatrix& E, const RadConfig& cfg);

/// Union of the S_b patterns plus the diagonal, as an all-zero sparse matrix.
SparseMatrix diffusion_pattern(const std::vector<NormalizedAffinity>& S);

/// Pattern-restricted iteration: every step is projected onto the pattern of
/// `initial`, which must contain the diagonal and the pattern of E.
SparseMatrix update_affinity(const SparseMatrix& initial,
                             const std::vector<NormalizedAffinity>& S, const Vector& beta,
                             const SparseMatrix& E, const RadConfig& cfg);

/// Closed-form fixed point through the explicit M²×M² system. Oracle scale
/// only: throws InvariantError for M > 64.
Matrix closed_form_affinity(const std::vector<NormalizedAffinity>& S, const Vector& beta,
                            const SparseMatrix& E, double mu);

/// Spectral radius of Σ_b β_b/(μ+1) S_b⊗S_b, by dense eigendecomposition.
/// Oracle scale only: throws InvariantError for M > 16.
double diffusion_operator_radius(const std::vector<NormalizedAffinity>& S, const Vector& beta,
                                 double mu);

/// Minimizer of Σ_b β_b H_b + (λ/2)‖β‖² over the simplex, in one pass over
/// the losses sorted ascending.
Vector update_weights(const Vector& H, double lambda);

/// Called after every outer iteration with the state so far.
using RadObserver = std::function<void(const EnsembleState&)>;

/// Alternates update_affinity and update_weights starting from Â = E and
/// uniform β, until the objective's relative change drops below
/// cfg.outer_tol or cfg.max_outer iterations ran.
EnsembleState run_rad(const std::vector<SparseAffinity>& A, const SparseMatrix& E,
                      const RadConfig& cfg, const RadObserver& observer = {});

/// Elementwise mean of the affinities.
SparseMatrix naive_average(const std::vector<SparseAffinity>& A);

struct PromptEnsemble {
  Matrix anchors;                      // N×d per-noun mean, not re-normalized
  std::vector<Index> degenerate_rows;  // rows whose mean has (near) zero norm
};

/// Per-noun mean of the B prompt embeddings.
PromptEnsemble prompt_ensemble_anchors(const AnchorBank& bank);

/// max(Â, 0) elementwise.
Matrix clip_negative(Matrix A_hat);
SparseMatrix clip_negative(SparseMatrix A_hat);

}  // namespace ntkc
