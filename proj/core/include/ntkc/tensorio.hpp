#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ntkc {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Rows of a FeatureMatrix must have Euclidean norm within this of 1.
inline constexpr double kUnitNormTolerance = 1e-4;

/// M×d unit-norm embeddings, one sample per row (M ≥ 2, d ≥ 2).
///
/// Values are stored at 64-bit for computation, but construction rounds every
/// entry to the nearest 32-bit float first. Every FeatureMatrix is therefore
/// exactly representable in the on-disk format and save/load is lossless.
/// Rows are validated, never re-normalized.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;

  /// Rounds to float precision and validates; throws InvariantError.
  static FeatureMatrix from_values(Matrix values);

  Index rows() const { return values_.rows(); }
  Index dim() const { return values_.cols(); }
  const Matrix& values() const { return values_; }

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
           a.values_ == b.values_;
  }

 private:
  explicit FeatureMatrix(Matrix values) : values_(std::move(values)) {}
  Matrix values_;
};

/// B prompt-specific N×d anchor matrices sharing N and d.
struct AnchorBank {
  std::vector<std::string> prompt_labels;
  std::vector<FeatureMatrix> banks;

  Index prompts() const { return static_cast<Index>(banks.size()); }
  Index nouns() const { return banks.empty() ? 0 : banks.front().rows(); }
  Index dim() const { return banks.empty() ? 0 : banks.front().dim(); }

  /// Throws InvariantError unless B ≥ 1, N ≥ 2 and all banks agree on shape.
  void validate() const;
};

/// Cluster or class assignment per sample; every label lies in [0, K).
struct LabelVector {
  std::vector<int> labels;
  int K = 0;

  /// K is inferred as max + 1. Throws InvariantError on negative labels.
  static LabelVector from_labels(std::vector<int> labels);

  Index size() const { return static_cast<Index>(labels.size()); }
  int operator[](Index i) const { return labels[static_cast<std::size_t>(i)]; }
};

// NTKF layout: "NTKF" | u8 version=1 | 4 reserved zero bytes | u64le rows |
// u64le cols | rows*cols f32le, row-major.
inline constexpr std::uint8_t kNtkfVersion = 1;
inline constexpr std::size_t kNtkfHeaderBytes = 4 + 1 + 4 + 8 + 8;

struct NtkfHeader {
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
};

/// Reads and checks only the header.
NtkfHeader read_ntkf_header(const std::filesystem::path& path);

/// Reads any NTKF matrix. Checks layout and finiteness, nothing else.
Matrix read_ntkf(const std::filesystem::path& path);

/// Writes any finite matrix. Entries are rounded to float.
void write_ntkf(const std::filesystem::path& path, const Matrix& values);

FeatureMatrix load_features(const std::filesystem::path& path);
void save_features(const FeatureMatrix& m, const std::filesystem::path& path);

struct ManifestEntry {
  std::string label;
  std::filesystem::path file;  // resolved against the manifest directory
};

/// Parses an anchor-bank manifest without loading the referenced files.
std::vector<ManifestEntry> read_anchor_manifest(const std::filesystem::path& manifest);

/// The manifest lists one prompt per line as `<label>\t<path>`. Relative paths
/// resolve against the manifest's directory. Blank lines and lines starting
/// with '#' are ignored.
AnchorBank load_anchor_bank(const std::filesystem::path& manifest);

/// Writes `<stem>_<b>.ntkf` next to the manifest, then the manifest itself.
void save_anchor_bank(const AnchorBank& bank, const std::filesystem::path& manifest,
                      const std::string& stem = "bank");

/// One integer per line. Blank lines are skipped.
LabelVector load_labels(const std::filesystem::path& path);
void save_labels(const LabelVector& labels, const std::filesystem::path& path);

/// Throws InvariantError naming `what` if any entry is non-finite or any row
/// is off unit norm by more than kUnitNormTolerance.
void validate_unit_rows(const Matrix& values, const std::string& what);

}  // namespace ntkc
