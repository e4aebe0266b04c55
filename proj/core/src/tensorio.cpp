#include "ntkc/tensorio.hpp"

#include "ntkc/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ntkc {
namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

void put_f32(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

float get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int b = 3; b >= 0; --b) bits = (bits << 8) | p[b];
  return std::bit_cast<float>(bits);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

NtkfHeader parse_header(const std::string& bytes, const std::filesystem::path& path) {
  if (bytes.size() < kNtkfHeaderBytes)
    throw FormatError("'" + path.string() + "': truncated NTKF header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (!std::equal(p, p + 4, "NTKF"))
    throw FormatError("'" + path.string() + "': bad magic, expected NTKF");
  if (p[4] != kNtkfVersion)
    throw FormatError("'" + path.string() + "': unsupported NTKF version " +
                      std::to_string(static_cast<int>(p[4])));
  if (p[5] != 0 || p[6] != 0 || p[7] != 0 || p[8] != 0)
    throw FormatError("'" + path.string() + "': reserved header bytes are not zero");
  return {get_u64(p + 9), get_u64(p + 17)};
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

void validate_unit_rows(const Matrix& values, const std::string& what) {
  if (!values.allFinite()) throw InvariantError(what + ": contains non-finite values");
  for (Index i = 0; i < values.rows(); ++i) {
    const double norm = values.row(i).norm();
    if (std::abs(norm - 1.0) > kUnitNormTolerance) {
      std::ostringstream msg;
      msg << what << ": row " << i << " has norm " << norm << ", expected 1 within "
          << kUnitNormTolerance;
      throw InvariantError(msg.str());
    }
  }
}

FeatureMatrix FeatureMatrix::from_values(Matrix values) {
  if (values.rows() < 2 || values.cols() < 2)
    throw InvariantError("feature matrix must be at least 2x2, got " +
                         std::to_string(values.rows()) + "x" + std::to_string(values.cols()));
  values = values.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
  validate_unit_rows(values, "feature matrix");
  return FeatureMatrix(std::move(values));
}

void AnchorBank::validate() const {
  if (banks.empty()) throw InvariantError("anchor bank has no prompts");
  if (prompt_labels.size() != banks.size())
    throw InvariantError("anchor bank: prompt label count does not match bank count");
  for (std::size_t b = 0; b < banks.size(); ++b) {
    if (banks[b].rows() != nouns() || banks[b].dim() != dim())
      throw InvariantError("anchor bank: prompt " + std::to_string(b) +
                           " shape differs from prompt 0");
  }
  if (nouns() < 2) throw InvariantError("anchor bank needs at least 2 nouns");
}

LabelVector LabelVector::from_labels(std::vector<int> labels) {
  int k = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0)
      throw InvariantError("label " + std::to_string(i) + " is negative");
    k = std::max(k, labels[i] + 1);
  }
  return LabelVector{std::move(labels), k};
}

NtkfHeader read_ntkf_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string bytes(kNtkfHeaderBytes, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  bytes.resize(static_cast<std::size_t>(in.gcount()));
  return parse_header(bytes, path);
}

Matrix read_ntkf(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const NtkfHeader h = parse_header(bytes, path);
  const std::uint64_t payload = bytes.size() - kNtkfHeaderBytes;
  if (h.rows != 0 && h.cols > payload / 4 / h.rows)
    throw FormatError("'" + path.string() + "': header dimensions exceed payload");
  if (payload != h.rows * h.cols * 4)
    throw FormatError("'" + path.string() + "': payload is " + std::to_string(payload) +
                      " bytes, header implies " + std::to_string(h.rows * h.cols * 4));

  Matrix m(static_cast<Index>(h.rows), static_cast<Index>(h.cols));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + kNtkfHeaderBytes;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j, p += 4) m(i, j) = get_f32(p);
  if (!m.allFinite()) throw InvariantError("'" + path.string() + "': non-finite value");
  return m;
}

void write_ntkf(const std::filesystem::path& path, const Matrix& values) {
  if (!values.allFinite()) throw InvariantError("refusing to write non-finite matrix");
  std::string bytes;
  bytes.reserve(kNtkfHeaderBytes + static_cast<std::size_t>(values.size()) * 4);
  bytes.append("NTKF");
  bytes.push_back(static_cast<char>(kNtkfVersion));
  bytes.append(4, '\0');
  put_u64(bytes, static_cast<std::uint64_t>(values.rows()));
  put_u64(bytes, static_cast<std::uint64_t>(values.cols()));
  for (Index i = 0; i < values.rows(); ++i)
    for (Index j = 0; j < values.cols(); ++j) put_f32(bytes, static_cast<float>(values(i, j)));
  write_file(path, bytes);
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  Matrix m = read_ntkf(path);
  try {
    return FeatureMatrix::from_values(std::move(m));
  } catch (const InvariantError& e) {
    throw InvariantError("'" + path.string() + "': " + e.what());
  }
}

void save_features(const FeatureMatrix& m, const std::filesystem::path& path) {
  write_ntkf(path, m.values());
}

std::vector<ManifestEntry> read_anchor_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest '" + manifest.string() + "'");
  const auto base = manifest.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw FormatError("manifest '" + manifest.string() + "' line " + std::to_string(line_no) +
                        ": expected '<label>\\t<path>'");
    std::filesystem::path file = trim(std::string_view(line).substr(tab + 1));
    if (file.empty())
      throw FormatError("manifest '" + manifest.string() + "' line " + std::to_string(line_no) +
                        ": empty path");
    if (file.is_relative()) file = base / file;
    entries.push_back({line.substr(0, tab), std::move(file)});
  }
  return entries;
}

AnchorBank load_anchor_bank(const std::filesystem::path& manifest) {
  AnchorBank bank;
  for (auto& entry : read_anchor_manifest(manifest)) {
    bank.prompt_labels.push_back(std::move(entry.label));
    bank.banks.push_back(load_features(entry.file));
  }
  bank.validate();
  return bank;
}

void save_anchor_bank(const AnchorBank& bank, const std::filesystem::path& manifest,
                      const std::string& stem) {
  bank.validate();
  std::string text;
  for (std::size_t b = 0; b < bank.banks.size(); ++b) {
    const std::string name = stem + "_" + std::to_string(b) + ".ntkf";
    save_features(bank.banks[b], manifest.parent_path() / name);
    if (bank.prompt_labels[b].find_first_of("\t\n") != std::string::npos)
      throw InvariantError("prompt label contains a tab or newline");
    text += bank.prompt_labels[b] + "\t" + name + "\n";
  }
  write_file(manifest, text);
}

LabelVector load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels file '" + path.string() + "'");
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    int value = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || end != t.data() + t.size())
      throw FormatError("'" + path.string() + "' line " + std::to_string(line_no) +
                        ": not an integer: '" + t + "'");
    if (value < 0)
      throw InvariantError("'" + path.string() + "' line " + std::to_string(line_no) +
                           ": negative label " + t);
    labels.push_back(value);
  }
  return LabelVector::from_labels(std::move(labels));
}

void save_labels(const LabelVector& labels, const std::filesystem::path& path) {
  std::string text;
  text.reserve(labels.labels.size() * 3);
  for (int v : labels.labels) {
    text += std::to_string(v);
    text.push_back('\n');
  }
  write_file(path, text);
}

}  // namespace ntkc
