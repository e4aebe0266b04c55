#pragma once

#include "ntkc/eval.hpp"
#include "ntkc/kernels.hpp"
#include "ntkc/rad.hpp"
#include "ntkc/spectral.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ntkc {

enum class Method {
  ntk_rad,            // per-prompt NTK graphs ensembled by diffusion
  ntk_single_prompt,  // NTK graph of the first prompt only
  ntk_naive_avg,      // mean of the per-prompt NTK graphs
  ntk_pe,             // NTK graph over prompt-averaged anchors
  kernel_sc,          // spectral clustering on a classical kernel graph
  kmeans_baseline,    // k-means on the raw features
  zero_shot,          // argmax over the first prompt's anchors as class names
};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

/// Everything one clustering run needs. Keys of the config file map 1:1 onto
/// fields; see config_keys().
struct PipelineConfig {
  std::filesystem::path features;
  std::filesystem::path anchors;  // manifest
  std::filesystem::path labels;   // optional ground truth
  std::filesystem::path output_dir = "out";
  int K = 2;
  Method method = Method::ntk_rad;
  /// Kind is used by kernel_sc only; ntk_* methods always use the NTK with
  /// this temperature.
  KernelSpec kernel = classical_default();
  Index q = 30;
  RadConfig rad;
  KMeansConfig kmeans;  // K is taken from PipelineConfig::K
  SpectralConfig spectral;
  bool dump_affinity = false;
  bool dump_embedding = false;
  bool trace_nmi = false;

  static KernelSpec classical_default() {
    KernelSpec spec;
    spec.kind = KernelKind::rbf;
    return spec;
  }
};

/// Config keys in the order format_config writes them.
const std::vector<std::string>& config_keys();

/// Sets one key. Relative paths resolve against `base_dir`. Throws
/// ConfigError on unknown keys or unparsable values.
void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir);

/// Flat `key=value` text; '#' starts a comment line.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Resolved config in the same format, parseable by parse_config.
std::string format_config(const PipelineConfig& cfg);

struct Violation {
  std::string key;
  std::string message;
};

/// Empty iff the config is runnable. Reads file headers but no payloads.
std::vector<Violation> validate_config(const PipelineConfig& cfg);

struct PipelineResult {
  LabelVector labels;
  std::optional<MetricReport> metrics;
  std::optional<EnsembleState> ensemble;
  std::vector<std::string> warnings;
};

/// Loads inputs, builds and ensembles affinities per cfg.method, clusters,
/// scores against labels when given, and writes into cfg.output_dir:
/// labels.txt, config.resolved, metrics.txt/metrics.csv (with labels),
/// trace.csv (ntk_rad), affinity.txt and embedding.ntkf (when requested).
/// Throws ConfigError before any work if validation fails; errors from a
/// stage are rethrown as StageError naming it.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace ntkc
