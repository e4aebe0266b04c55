// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include "ntkc/graph.hpp"
#include "ntkc/kernels.hpp"
#include "ntkc/pipeline.hpp"
#include "ntkc/rad.hpp"
#include "ntkc/synthetic.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace ntkc;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = NTKC_FIXTURE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_budget = budget_s <= 0.0 || secs < budget_s;
  const bool pass = o.pass && in_budget;
  if (!pass) ++failures;
  std::printf("%s  %-28s %s; %.2fs%s\n", pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs,
              budget_s > 0.0 ? (in_budget ? " (within budget)" : " (over budget)") : "");
  std::fflush(stdout);
}

template <class... T>
std::string fmt(const char* f, T... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<NormalizedAffinity> random_normalized(std::mt19937_64& rng, Index m, int count) {
  std::vector<NormalizedAffinity> out;
  for (int b = 0; b < count; ++b) out.push_back(normalize(oracle::random_affinity(rng, m, 0.4)));
  return out;
}

Vector random_simplex(std::mt19937_64& rng, Index b) {
  std::exponential_distribution<double> e(1.0);
  Vector v(b);
  for (Index k = 0; k < b; ++k) v(k) = e(rng);
  return v / v.sum();
}

double cross_mass(const SparseAffinity& a, const LabelVector& y) {
  double cross = 0, total = 0;
  for (Index i = 0; i < a.matrix().outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(a.matrix(), i); it; ++it) {
      total += it.value();
      if (y[i] != y[it.col()]) cross += it.value();
    }
  return cross / total;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome ntk_closed_form() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> nouns(2, 16), dims(2, 32);
  std::uniform_real_distribution<double> temp(0.01, 1.0);
  double worst_value = 0.0, worst_grad = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Index n = nouns(rng), d = dims(rng);
    const double tau = temp(rng);
    const Matrix W = oracle::random_unit_rows(rng, n, d);
    const Vector zi = oracle::random_unit(rng, d), zj = oracle::random_unit(rng, d);
    const double v = ntk_value(zi, zj, W, tau);
    const double o = ntk_oracle(zi, zj, W, tau);
    worst_value = std::max(worst_value, std::abs(v - o) / std::abs(o));
    // Finite differences are compared relative to the gradient's largest
    // entry: entries that underflow carry only rounding noise.
    const Vector g = log_sum_exp_gradient(zi, W, tau);
    const Vector fd = oracle::fd_log_sum_exp_gradient(zi, W, tau, 1e-5);
    const double scale = g.cwiseAbs().maxCoeff();
    for (Index k = 0; k < g.size(); ++k)
      worst_grad = std::max(worst_grad, std::abs(g(k) - fd(k)) / std::max(std::abs(g(k)), scale));
  }
  return {worst_value <= 1e-9 && worst_grad <= 1e-5,
          fmt("1000 draws, max rel |value-oracle| = %.2e (<= 1e-9), max rel fd error = %.2e (<= 1e-5)",
              worst_value, worst_grad)};
}

Outcome fixed_point() {
  std::mt19937_64 rng(1002);
  RadConfig cfg;
  cfg.inner_tol = 1e-13;
  cfg.max_inner = 100000;
  double worst = 0.0;
  int count = 0;
  for (int t = 0; t < 20; ++t) {
    const int b = 1 + t % 3;
    cfg.mu = (t / 3) % 2 == 0 ? 0.1 : 1.0;
    const auto S = random_normalized(rng, 5, b);
    const Vector beta = random_simplex(rng, b);
    const SparseMatrix E = identity_reference(5);
    std::vector<Matrix> dense;
    for (const auto& s : S) dense.push_back(s.to_dense());
    const Matrix direct = oracle::direct_fixed_point(dense, beta, Matrix(E), cfg.mu);
    const Matrix iter = update_affinity(Matrix(E), S, beta, E, cfg);
    const Matrix closed = closed_form_affinity(S, beta, E, cfg.mu);
    worst = std::max({worst, (iter - direct).norm() / direct.norm(), (closed - direct).norm() / direct.norm()});
    ++count;
  }
  return {worst <= 1e-7, fmt("%d instances (M=5, B in 1..3, mu in {0.1,1}), max rel Frobenius gap = %.2e (<= 1e-7)",
                             count, worst)};
}

Outcome beta_grid() {
  std::mt19937_64 rng(1003);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Index b = 2 + t % 4;
    const double lambda = t % 2 ? 1.0 : 10.0;
    // Loss spreads comparable to λ so that some weights hit zero.
    const double spread = (t % 5 + 1) * lambda / 2.0;
    Vector H(b);
    for (Index k = 0; k < b; ++k) H(k) = 5.0 + spread * u(rng);
    const Vector grid = oracle::grid_beta(H, lambda);
    worst = std::max(worst, (update_weights(H, lambda) - grid).cwiseAbs().maxCoeff());
  }
  return {worst <= 2e-3, fmt("50 H vectors (B in 2..5, lambda in {1,10}), max coordinate gap = %.2e (<= 2e-3)", worst)};
}

Outcome monotone() {
  std::mt19937_64 rng(1004);
  std::uniform_int_distribution<int> sizes(8, 64), prompts(1, 4);
  int violations = 0, steps = 0;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Index m = sizes(rng);
    const int b = prompts(rng);
    std::vector<SparseAffinity> A;
    if (t % 2 == 0) {
      for (int k = 0; k < b; ++k) A.push_back(oracle::random_affinity(rng, m, 0.15));
    } else {
      // kNN graphs under the NTK. Features in the positive orthant keep every
      // row with a positive-affinity neighbor.
      const Matrix f = oracle::random_unit_rows(rng, m, 8).cwiseAbs();
      for (int k = 0; k < b; ++k) {
        const Matrix W = oracle::random_unit_rows(rng, 6, 8);
        A.push_back(build_affinity(f, KernelSpec{}, &W, std::min<Index>(10, m - 1)));
      }
    }
    RadConfig cfg;
    cfg.outer_tol = 1e-14;
    cfg.pattern_restricted = t % 4 == 3;
    const EnsembleState s = run_rad(A, identity_reference(m), cfg);
    for (std::size_t k = 1; k < s.objective_trace.size(); ++k) {
      ++steps;
      const double rise = s.objective_trace[k] - s.objective_trace[k - 1];
      worst = std::max(worst, rise);
      if (rise > 1e-12) ++violations;
    }
  }
  return {violations == 0,
          fmt("50 runs (M in 8..64, B in 1..4), %d outer steps, %d rises beyond 1e-12 (max rise %.2e)", steps,
              violations, worst)};
}

Outcome kronecker() {
  std::mt19937_64 rng(1005);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (Index m : {3, 4})
    for (int t = 0; t < 25; ++t) {
      const auto S = random_normalized(rng, m, 1);
      Matrix a(m, m);
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) a(i, j) = g(rng);
      a = 0.5 * (a + a.transpose());
      worst = std::max(worst, std::abs(diffusion_loss(a, S[0]) - oracle::kron_loss(a, S[0].to_dense())));
    }
  return {worst <= 1e-12, fmt("50 instances (M=3,4), max |loss - Kronecker form| = %.2e (<= 1e-12)", worst)};
}

Outcome radius() {
  std::mt19937_64 rng(1006);
  double worst = -1.0;
  int count = 0;
  for (Index m = 2; m <= 8; ++m)
    for (int t = 0; t < 6; ++t) {
      const int b = 1 + t % 3;
      const double mu = t < 3 ? 0.1 : 1.0;
      const auto S = random_normalized(rng, m, b);
      const Vector beta = random_simplex(rng, b);
      const double rho = diffusion_operator_radius(S, beta, mu);
      worst = std::max(worst, rho - 1.0 / (mu + 1.0));
      ++count;
    }
  return {worst <= 1e-10, fmt("%d instances (M in 2..8), max rho - 1/(mu+1) = %.2e (<= 1e-10)", count, worst)};
}

Outcome end_to_end() {
  const fs::path out = fs::temp_directory_path() / "ntkc_acceptance_e2e";
  fs::remove_all(out);
  PipelineConfig cfg = load_config(kFixtures / "sphere.cfg");
  double ntk_ari = 0.0, rbf_ari = 0.0, min_acc = 1.0;
  for (int seed = 0; seed < 20; ++seed) {
    cfg.kmeans.seed = static_cast<std::uint64_t>(seed);
    cfg.method = Method::ntk_rad;
    cfg.output_dir = out / ("rad_" + std::to_string(seed));
    const PipelineResult ntk = run_pipeline(cfg);
    cfg.method = Method::kernel_sc;
    cfg.kernel.kind = KernelKind::rbf;
    cfg.output_dir = out / ("rbf_" + std::to_string(seed));
    const PipelineResult rbf = run_pipeline(cfg);
    ntk_ari += ntk.metrics->ari / 20.0;
    rbf_ari += rbf.metrics->ari / 20.0;
    min_acc = std::min(min_acc, ntk.metrics->acc);
  }
  const FeatureMatrix f = load_features(cfg.features);
  const LabelVector y = load_labels(cfg.labels);
  const AnchorBank bank = load_anchor_bank(cfg.anchors);
  KernelSpec rbf;
  rbf.kind = KernelKind::rbf;
  const double rbf_cross = cross_mass(build_affinity(f, rbf, nullptr, cfg.q), y);
  double ntk_cross = 0.0;
  for (const auto& b : bank.banks)
    ntk_cross = std::max(ntk_cross, cross_mass(build_affinity(f, KernelSpec{}, &b.values(), cfg.q), y));
  fs::remove_all(out);
  return {min_acc >= 0.95 && ntk_ari >= rbf_ari && ntk_cross < rbf_cross,
          fmt("20 seeds: min ACC %.4f (>= 0.95), mean ARI ntk_rad %.6f vs rbf %.6f; cross-cluster "
              "mass ntk (worst bank) %.4g < rbf %.4g",
              min_acc, ntk_ari, rbf_ari, ntk_cross, rbf_cross)};
}

// Labelings of m items into at most k blocks, one per partition (first
// occurrences in increasing label order).
std::vector<std::vector<int>> partitions(int m, int k) {
  std::vector<std::vector<int>> out;
  for (auto& l : oracle::all_labelings(m, k)) {
    int next = 0;
    bool canonical = true;
    for (int v : l) {
      if (v > next) {
        canonical = false;
        break;
      }
      if (v == next) ++next;
    }
    if (canonical) out.push_back(std::move(l));
  }
  return out;
}

Outcome metrics() {
  CountMatrix c(2, 2);
  c << 5, 1, 2, 4;
  std::vector<int> pred, truth;
  for (int p = 0; p < 2; ++p)
    for (int t = 0; t < 2; ++t)
      for (int n = 0; n < c(p, t); ++n) pred.push_back(p), truth.push_back(t);
  const double acc = accuracy(LabelVector::from_labels(pred), LabelVector::from_labels(truth));
  const bool golden = acc == 0.75 && oracle::permutation_accuracy(pred, truth) == 0.75;

  // All raw labelings for M ≤ 5; every pair of partitions for M = 6..8
  // (the metrics depend on the labelings only through their partitions).
  long pairs = 0, ari_mismatch = 0, nmi_mismatch = 0;
  double nmi_worst = 0.0;
  for (int m = 2; m <= 8; ++m) {
    const auto set = m <= 5 ? oracle::all_labelings(m, 3) : partitions(m, 3);
    for (const auto& p : set)
      for (const auto& q : set) {
        const LabelVector lp = LabelVector::from_labels(p), lq = LabelVector::from_labels(q);
        ++pairs;
        if (ari(lp, lq) != oracle::pair_counting_ari(p, q)) ++ari_mismatch;
        const double gap = std::abs(nmi(lp, lq) - oracle::entropy_nmi(p, q));
        nmi_worst = std::max(nmi_worst, gap);
        if (gap > 1e-12) ++nmi_mismatch;
      }
  }
  return {golden && ari_mismatch == 0 && nmi_mismatch == 0,
          fmt("accuracy([[5,1],[2,4]]) = %.2f; %ld labeling pairs (M <= 8, K <= 3): %ld ARI mismatches "
              "(bit-exact), max NMI gap %.1e (<= 1e-12)",
              acc, pairs, ari_mismatch, nmi_worst)};
}

Outcome determinism() {
  const fs::path out = fs::temp_directory_path() / "ntkc_acceptance_det";
  fs::remove_all(out);
  PipelineConfig cfg = load_config(kFixtures / "sphere.cfg");
  const char* old = std::getenv("CLUSTER_THREADS");
  const std::string saved = old ? old : "";
  cfg.output_dir = out / "t1";
  ::setenv("CLUSTER_THREADS", "1", 1);
  run_pipeline(cfg);
  cfg.output_dir = out / "t8";
  ::setenv("CLUSTER_THREADS", "8", 1);
  run_pipeline(cfg);
  if (old) ::setenv("CLUSTER_THREADS", saved.c_str(), 1);
  else ::unsetenv("CLUSTER_THREADS");
  const std::string a = read_text(out / "t1" / "labels.txt");
  const std::string b = read_text(out / "t8" / "labels.txt");
  fs::remove_all(out);
  return {!a.empty() && a == b, fmt("labels.txt with CLUSTER_THREADS=1 and =8: %s (%zu bytes)",
                                    a == b ? "identical" : "different", a.size())};
}

}  // namespace

int main() {
  criterion("ntk-closed-form-oracle", 10.0, ntk_closed_form);
  criterion("diffusion-fixed-point", 5.0, fixed_point);
  criterion("weights-kkt-vs-grid", 30.0, beta_grid);
  criterion("objective-monotone", 0.0, monotone);
  criterion("kronecker-loss-identity", 0.0, kronecker);
  criterion("diffusion-spectral-radius", 0.0, radius);
  criterion("end-to-end-synthetic", 60.0, end_to_end);
  criterion("metric-golden-values", 0.0, metrics);
  criterion("thread-count-determinism", 0.0, determinism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
