// cluster: command-line front end for the clustering pipeline.
//
//   cluster run --config <path> [--<key> <value> ...]
//   cluster validate --config <path> [--<key> <value> ...]
//   cluster metrics --pred <labels> --truth <labels>
//
// Every config key can be overridden by a flag of the same name. Exit codes:
// 0 success, 1 runtime failure, 2 invalid config or usage.

#include "ntkc/error.hpp"
#include "ntkc/eval.hpp"
#include "ntkc/pipeline.hpp"

#include <CLI11.hpp>

#include <deque>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

using ntkc::PipelineConfig;

struct Overrides {
  std::deque<std::pair<std::string, std::optional<std::string>>> values;

  void attach(CLI::App* app) {
    for (const auto& key : ntkc::config_keys()) {
      auto& slot = values.emplace_back(key, std::nullopt);
      app->add_option("--" + key, slot.second, "override config key '" + key + "'");
    }
  }
};

PipelineConfig resolve(const std::string& config_path, const Overrides& overrides) {
  PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : ntkc::load_config(config_path);
  const auto cwd = std::filesystem::current_path();
  for (const auto& [key, value] : overrides.values)
    if (value) ntkc::apply_setting(cfg, key, *value, cwd);
  return cfg;
}

int report_violations(const std::vector<ntkc::Violation>& violations) {
  for (const auto& v : violations) std::cerr << "invalid " << v.key << ": " << v.message << '\n';
  return violations.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NTK affinity spectral clustering"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides run_overrides;
  auto* run = app.add_subcommand("run", "run the pipeline and write artifacts");
  run->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  run_overrides.attach(run);

  Overrides validate_overrides;
  auto* validate = app.add_subcommand("validate", "check a config without computing");
  validate->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  validate_overrides.attach(validate);

  std::string pred_path, truth_path;
  auto* metrics = app.add_subcommand("metrics", "score a labels file against ground truth");
  metrics->add_option("--pred", pred_path, "predicted labels")->required()->check(CLI::ExistingFile);
  metrics->add_option("--truth", truth_path, "true labels")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) {
      const int code = report_violations(ntkc::validate_config(resolve(config_path, validate_overrides)));
      if (code == 0) std::cout << "ok\n";
      return code;
    }
    if (*metrics) {
      const auto report = ntkc::evaluate(ntkc::load_labels(pred_path), ntkc::load_labels(truth_path));
      std::cout << ntkc::format_report(report);
      return 0;
    }
    const PipelineConfig cfg = resolve(config_path, run_overrides);
    if (const int code = report_violations(ntkc::validate_config(cfg)); code != 0) return code;
    const auto result = ntkc::run_pipeline(cfg);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    if (result.metrics) std::cout << ntkc::format_report(*result.metrics);
    std::cout << "labels written to " << (cfg.output_dir / "labels.txt").string() << '\n';
    return 0;
  } catch (const ntkc::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
