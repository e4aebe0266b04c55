#include "ntkc/pipeline.hpp"

#include "ntkc/error.hpp"
#include "ntkc/graph.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

namespace ntkc {
namespace {

namespace fs = std::filesystem;

bool is_ntk(Method m) {
  return m == Method::ntk_rad || m == Method::ntk_single_prompt || m == Method::ntk_naive_avg ||
         m == Method::ntk_pe;
}

bool needs_anchors(Method m) { return is_ntk(m) || m == Method::zero_shot; }

template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void check_file(std::vector<Violation>& out, const std::string& key, const fs::path& p) {
  std::error_code ec;
  if (p.empty()) out.push_back({key, "path is required"});
  else if (!fs::is_regular_file(p, ec)) out.push_back({key, "no such file '" + p.string() + "'"});
}

template <class Fn>
void check_valid(std::vector<Violation>& out, const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    out.push_back({key, e.what()});
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string real(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

SpectralConfig spectral_config(const PipelineConfig& cfg) {
  SpectralConfig sc = cfg.spectral;
  sc.kmeans = cfg.kmeans;
  sc.kmeans.K = cfg.K;
  sc.eigen.seed = cfg.kmeans.seed;
  return sc;
}

KernelSpec ntk_spec(const PipelineConfig& cfg) {
  KernelSpec spec = cfg.kernel;
  spec.kind = KernelKind::ntk;
  return spec;
}

}  // namespace

std::vector<Violation> validate_config(const PipelineConfig& cfg) {
  std::vector<Violation> out;
  check_file(out, "features", cfg.features);
  if (needs_anchors(cfg.method)) check_file(out, "anchors", cfg.anchors);
  if (!cfg.labels.empty()) check_file(out, "labels", cfg.labels);
  if (cfg.output_dir.empty()) out.push_back({"out", "output directory is required"});
  if (cfg.q < 1) out.push_back({"q", "q must be at least 1"});
  if (cfg.K < 2) out.push_back({"K", "K must be at least 2"});
  if (cfg.method == Method::kernel_sc && cfg.kernel.kind == KernelKind::ntk)
    out.push_back({"kernel", "kernel_sc takes a classical kernel; use an ntk_* method for ntk"});

  KernelSpec spec = is_ntk(cfg.method) ? ntk_spec(cfg) : cfg.kernel;
  check_valid(out, "kernel", [&] { spec.validate(); });
  if (cfg.method == Method::ntk_rad) check_valid(out, "rad", [&] { cfg.rad.validate(); });
  if (cfg.method != Method::zero_shot) {
    KMeansConfig km = cfg.kmeans;
    km.K = std::max(cfg.K, 2);
    check_valid(out, "kmeans", [&] { km.validate(); });
  }

  // Shapes come from headers only.
  std::optional<NtkfHeader> feats;
  if (out.empty() || fs::is_regular_file(cfg.features)) {
    try {
      feats = read_ntkf_header(cfg.features);
    } catch (const std::exception& e) {
      out.push_back({"features", e.what()});
    }
  }
  if (feats) {
    const auto m = static_cast<long long>(feats->rows);
    if (cfg.K > m)
      out.push_back({"K", "K = " + std::to_string(cfg.K) + " exceeds the " + std::to_string(m) +
                              " samples"});
    if (is_ntk(cfg.method) || cfg.method == Method::kernel_sc) {
      if (cfg.q >= m && m > 0)
        out.push_back({"q", "q = " + std::to_string(cfg.q) + " needs more than " +
                                std::to_string(m) + " samples"});
    }
  }
  if (needs_anchors(cfg.method) && fs::is_regular_file(cfg.anchors)) {
    try {
      const auto entries = read_anchor_manifest(cfg.anchors);
      if (entries.empty()) out.push_back({"anchors", "manifest lists no banks"});
      for (const auto& entry : entries) {
        const NtkfHeader h = read_ntkf_header(entry.file);
        if (feats && h.cols != feats->cols) {
          out.push_back({"anchors", "bank '" + entry.file.string() + "' has dimension " +
                                        std::to_string(h.cols) + ", features have " +
                                        std::to_string(feats->cols)});
          break;
        }
        if (cfg.method == Method::zero_shot && h.rows != static_cast<std::uint64_t>(cfg.K)) {
          out.push_back({"anchors", "zero_shot needs one anchor per class: bank has " +
                                        std::to_string(h.rows) + " rows, K = " +
                                        std::to_string(cfg.K)});
          break;
        }
      }
    } catch (const std::exception& e) {
      out.push_back({"anchors", e.what()});
    }
  }
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  const auto violations = validate_config(cfg);
  if (!violations.empty()) {
    std::string msg = "invalid config:";
    for (const auto& v : violations) msg += "\n  " + v.key + ": " + v.message;
    throw ConfigError(msg);
  }

  PipelineResult result;
  stage("output", [&] {
    fs::create_directories(cfg.output_dir);
    write_text(cfg.output_dir / "config.resolved", format_config(cfg));
  });

  const FeatureMatrix feats = stage("load_features", [&] { return load_features(cfg.features); });
  AnchorBank bank;
  if (needs_anchors(cfg.method))
    bank = stage("load_anchors", [&] { return load_anchor_bank(cfg.anchors); });
  std::optional<LabelVector> truth;
  if (!cfg.labels.empty()) {
    truth = stage("load_labels", [&] {
      LabelVector t = load_labels(cfg.labels);
      if (t.size() != feats.rows())
        throw FormatError("labels file has " + std::to_string(t.size()) + " entries, features have " +
                          std::to_string(feats.rows()) + " rows");
      return t;
    });
  }

  const SpectralConfig sc = spectral_config(cfg);
  ClusterResult clustered;
  bool have_embedding = false;
  std::vector<double> trace_nmi;

  const auto single_prompt = [&](const Matrix& anchors) {
    const SparseAffinity a =
        stage("build_affinity", [&] { return build_affinity(feats, ntk_spec(cfg), &anchors, cfg.q); });
    if (cfg.dump_affinity)
      stage("output", [&] { write_affinity_text(cfg.output_dir / "affinity.txt", a.matrix()); });
    clustered = stage("spectral_cluster", [&] { return spectral_cluster(a, sc); });
    have_embedding = true;
  };

  switch (cfg.method) {
    case Method::ntk_single_prompt:
      single_prompt(bank.banks.front().values());
      break;
    case Method::ntk_pe: {
      const PromptEnsemble pe = stage("ensemble", [&] { return prompt_ensemble_anchors(bank); });
      if (!pe.degenerate_rows.empty())
        result.warnings.push_back("degenerate anchors: " + std::to_string(pe.degenerate_rows.size()) +
                                  " prompt-averaged anchor rows have near-zero norm");
      single_prompt(pe.anchors);
      break;
    }
    case Method::ntk_rad:
      if (bank.prompts() == 1) {
        single_prompt(bank.banks.front().values());
        break;
      }
      [[fallthrough]];
    case Method::ntk_naive_avg: {
      std::vector<SparseAffinity> per_prompt(static_cast<std::size_t>(bank.prompts()));
      stage("build_affinity", [&] {
        for (Index b = 0; b < bank.prompts(); ++b)
          per_prompt[static_cast<std::size_t>(b)] =
              build_affinity(feats, ntk_spec(cfg), &bank.banks[static_cast<std::size_t>(b)].values(), cfg.q);
      });
      if (cfg.method == Method::ntk_naive_avg) {
        const SparseMatrix avg = stage("ensemble", [&] { return naive_average(per_prompt); });
        if (cfg.dump_affinity)
          stage("output", [&] { write_affinity_text(cfg.output_dir / "affinity.txt", avg); });
        clustered = stage("spectral_cluster", [&] { return spectral_cluster(avg, sc); });
        have_embedding = true;
        break;
      }
      const SparseMatrix E = identity_reference(feats.rows());
      RadObserver observer;
      if (cfg.trace_nmi && truth) {
        observer = [&](const EnsembleState& s) {
          const ClusterResult r = s.pattern_restricted
                                      ? spectral_cluster(clip_negative(s.A_hat_sparse), sc)
                                      : spectral_cluster(clip_negative(s.A_hat), sc);
          trace_nmi.push_back(nmi(r.labels, *truth));
        };
      }
      EnsembleState state = stage("ensemble", [&] { return run_rad(per_prompt, E, cfg.rad, observer); });
      if (state.pattern_restricted) {
        state.A_hat_sparse = clip_negative(std::move(state.A_hat_sparse));
        if (cfg.dump_affinity)
          stage("output", [&] { write_affinity_text(cfg.output_dir / "affinity.txt", state.A_hat_sparse); });
        clustered = stage("spectral_cluster", [&] { return spectral_cluster(state.A_hat_sparse, sc); });
      } else {
        state.A_hat = clip_negative(std::move(state.A_hat));
        if (cfg.dump_affinity)
          stage("output", [&] { write_affinity_text(cfg.output_dir / "affinity.txt", state.A_hat); });
        clustered = stage("spectral_cluster", [&] { return spectral_cluster(state.A_hat, sc); });
      }
      have_embedding = true;
      result.ensemble = std::move(state);
      break;
    }
    case Method::kernel_sc: {
      const SparseAffinity a =
          stage("build_affinity", [&] { return build_affinity(feats, cfg.kernel, nullptr, cfg.q); });
      if (cfg.dump_affinity)
        stage("output", [&] { write_affinity_text(cfg.output_dir / "affinity.txt", a.matrix()); });
      clustered = stage("spectral_cluster", [&] { return spectral_cluster(a, sc); });
      have_embedding = true;
      break;
    }
    case Method::kmeans_baseline:
      clustered.labels = stage("kmeans", [&] { return kmeans(feats.values(), sc.kmeans); });
      break;
    case Method::zero_shot:
      clustered.labels = stage("zero_shot", [&] {
        return zero_shot_assign(feats.values(), bank.banks.front().values(), cfg.kernel.temperature);
      });
      break;
  }
  result.labels = clustered.labels;

  if (truth) result.metrics = stage("eval", [&] { return evaluate(result.labels, *truth); });

  stage("output", [&] {
    save_labels(result.labels, cfg.output_dir / "labels.txt");
    if (result.metrics) {
      write_text(cfg.output_dir / "metrics.txt", format_report(*result.metrics));
      write_text(cfg.output_dir / "metrics.csv",
                 report_csv_header() + "\n" + report_csv_row(*result.metrics) + "\n");
    }
    if (result.ensemble) {
      const EnsembleState& s = *result.ensemble;
      std::ostringstream trace;
      trace << "iteration,objective";
      for (Index b = 0; b < s.beta.size(); ++b) trace << ",beta_" << b;
      const bool with_nmi = !trace_nmi.empty();
      if (with_nmi) trace << ",nmi";
      trace << '\n';
      for (std::size_t t = 0; t < s.objective_trace.size(); ++t) {
        trace << t << ',' << real(s.objective_trace[t]);
        for (Index b = 0; b < s.beta_trace[t].size(); ++b) trace << ',' << real(s.beta_trace[t](b));
        if (with_nmi) {
          trace << ',';
          if (t > 0 && t - 1 < trace_nmi.size()) trace << real(trace_nmi[t - 1]);
        }
        trace << '\n';
      }
      write_text(cfg.output_dir / "trace.csv", trace.str());
    }
    if (cfg.dump_embedding && have_embedding)
      write_ntkf(cfg.output_dir / "embedding.ntkf", clustered.embedding.Y);
    if (!result.warnings.empty()) {
      std::string text;
      for (const auto& w : result.warnings) text += w + "\n";
      write_text(cfg.output_dir / "warnings.txt", text);
    }
  });
  return result;
}

}  // namespace ntkc
