#include "ntkc/error.hpp"
#include "ntkc/pipeline.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ntkc {
namespace {

constexpr std::array<std::pair<Method, std::string_view>, 7> kMethodNames{{
    {Method::ntk_rad, "ntk_rad"},
    {Method::ntk_single_prompt, "ntk_single_prompt"},
    {Method::ntk_naive_avg, "ntk_naive_avg"},
    {Method::ntk_pe, "ntk_pe"},
    {Method::kernel_sc, "kernel_sc"},
    {Method::kmeans_baseline, "kmeans_baseline"},
    {Method::zero_shot, "zero_shot"},
}};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("config key '" + std::string(key) + "': '" + std::string(value) +
                    "' is not " + expected);
}

template <class T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size()) bad_value(key, value, "an integer");
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  const std::string s(value);
  try {
    std::size_t used = 0;
    const double out = std::stod(s, &used);
    if (used != s.size()) bad_value(key, value, "a number");
    return out;
  } catch (const std::logic_error&) {
    bad_value(key, value, "a number");
  }
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "a boolean");
}

std::filesystem::path parse_path(std::string_view value, const std::filesystem::path& base) {
  std::filesystem::path p(value);
  if (p.empty() || p.is_absolute()) return p;
  return (base.empty() ? std::filesystem::current_path() : base) / p;
}

std::string real(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::string_view to_string(Method method) {
  for (const auto& [m, name] : kMethodNames)
    if (m == method) return name;
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& [m, n] : kMethodNames)
    if (n == name) return m;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "features", "anchors",     "labels",        "out",          "method",
      "k",        "kernel",      "tau",           "poly_degree",  "poly_coef0",
      "gamma",    "sigmoid_coef0", "q",           "mu",           "lambda",
      "max_outer", "max_inner",  "inner_tol",     "outer_tol",    "pattern_restricted",
      "n_init",   "max_iter",    "kmeans_tol",    "seed",         "row_normalize",
      "dump_affinity", "dump_embedding", "trace_nmi"};
  return keys;
}

void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view raw,
                   const std::filesystem::path& base_dir) {
  const std::string value = trim(raw);
  if (key == "features") cfg.features = parse_path(value, base_dir);
  else if (key == "anchors") cfg.anchors = parse_path(value, base_dir);
  else if (key == "labels") cfg.labels = parse_path(value, base_dir);
  else if (key == "out") cfg.output_dir = parse_path(value, base_dir);
  else if (key == "method") cfg.method = parse_method(value);
  else if (key == "k") cfg.K = parse_integer<int>(key, value);
  else if (key == "kernel") cfg.kernel.kind = parse_kernel_kind(value);
  else if (key == "tau") cfg.kernel.temperature = parse_real(key, value);
  else if (key == "poly_degree") cfg.kernel.poly_degree = parse_integer<int>(key, value);
  else if (key == "poly_coef0") cfg.kernel.poly_coef0 = parse_real(key, value);
  else if (key == "gamma") {
    if (value.empty() || value == "auto") cfg.kernel.gamma.reset();
    else cfg.kernel.gamma = parse_real(key, value);
  }
  else if (key == "sigmoid_coef0") cfg.kernel.sigmoid_coef0 = parse_real(key, value);
  else if (key == "q") cfg.q = parse_integer<Index>(key, value);
  else if (key == "mu") cfg.rad.mu = parse_real(key, value);
  else if (key == "lambda") cfg.rad.lambda = parse_real(key, value);
  else if (key == "max_outer") cfg.rad.max_outer = parse_integer<int>(key, value);
  else if (key == "max_inner") cfg.rad.max_inner = parse_integer<int>(key, value);
  else if (key == "inner_tol") cfg.rad.inner_tol = parse_real(key, value);
  else if (key == "outer_tol") cfg.rad.outer_tol = parse_real(key, value);
  else if (key == "pattern_restricted") cfg.rad.pattern_restricted = parse_bool(key, value);
  else if (key == "n_init") cfg.kmeans.n_init = parse_integer<int>(key, value);
  else if (key == "max_iter") cfg.kmeans.max_iter = parse_integer<int>(key, value);
  else if (key == "kmeans_tol") cfg.kmeans.tol = parse_real(key, value);
  else if (key == "seed") cfg.kmeans.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "row_normalize") cfg.spectral.row_normalize = parse_bool(key, value);
  else if (key == "dump_affinity") cfg.dump_affinity = parse_bool(key, value);
  else if (key == "dump_embedding") cfg.dump_embedding = parse_bool(key, value);
  else if (key == "trace_nmi") cfg.trace_nmi = parse_bool(key, value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    apply_setting(cfg, trim(std::string_view(t).substr(0, eq)), std::string_view(t).substr(eq + 1),
                  base_dir);
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::filesystem::absolute(path).parent_path());
}

std::string format_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  const auto line = [&](std::string_view key, const std::string& value) {
    out << key << '=' << value << '\n';
  };
  line("features", cfg.features.string());
  line("anchors", cfg.anchors.string());
  line("labels", cfg.labels.string());
  line("out", cfg.output_dir.string());
  line("method", std::string(to_string(cfg.method)));
  line("k", std::to_string(cfg.K));
  line("kernel", std::string(to_string(cfg.kernel.kind)));
  line("tau", real(cfg.kernel.temperature));
  line("poly_degree", std::to_string(cfg.kernel.poly_degree));
  line("poly_coef0", real(cfg.kernel.poly_coef0));
  line("gamma", cfg.kernel.gamma ? real(*cfg.kernel.gamma) : std::string("auto"));
  line("sigmoid_coef0", real(cfg.kernel.sigmoid_coef0));
  line("q", std::to_string(cfg.q));
  line("mu", real(cfg.rad.mu));
  line("lambda", real(cfg.rad.lambda));
  line("max_outer", std::to_string(cfg.rad.max_outer));
  line("max_inner", std::to_string(cfg.rad.max_inner));
  line("inner_tol", real(cfg.rad.inner_tol));
  line("outer_tol", real(cfg.rad.outer_tol));
  line("pattern_restricted", cfg.rad.pattern_restricted ? "true" : "false");
  line("n_init", std::to_string(cfg.kmeans.n_init));
  line("max_iter", std::to_string(cfg.kmeans.max_iter));
  line("kmeans_tol", real(cfg.kmeans.tol));
  line("seed", std::to_string(cfg.kmeans.seed));
  line("row_normalize", cfg.spectral.row_normalize ? "true" : "false");
  line("dump_affinity", cfg.dump_affinity ? "true" : "false");
  line("dump_embedding", cfg.dump_embedding ? "true" : "false");
  line("trace_nmi", cfg.trace_nmi ? "true" : "false");
  return out.str();
}

}  // namespace ntkc
