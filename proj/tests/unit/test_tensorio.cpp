#include "ntkc/error.hpp"
#include "ntkc/tensorio.hpp"

#include "oracles.hpp"
#include "scratch.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

using namespace ntkc;
namespace fs = std::filesystem;

namespace {

// Hand-assembled NTKF bytes so the reader is checked against the layout, not
// against the writer.
std::string ntkf_bytes(std::uint64_t rows, std::uint64_t cols, const std::vector<float>& values,
                       std::uint8_t version = 1) {
  std::string out = "NTKF";
  out.push_back(static_cast<char>(version));
  out.append(4, '\0');
  for (std::uint64_t v : {rows, cols})
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
  for (float f : values) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  return out;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Tensorio, LoadsIdentityRows) {
  const auto dir = test::scratch_dir();
  write_bytes(dir / "id.ntkf", ntkf_bytes(2, 2, {1, 0, 0, 1}));
  const FeatureMatrix m = load_features(dir / "id.ntkf");
  EXPECT_EQ(m.rows(), 2);
  EXPECT_EQ(m.dim(), 2);
  EXPECT_EQ(m.values(), Matrix::Identity(2, 2));
}

TEST(Tensorio, RejectsOffNormRow) {
  const auto dir = test::scratch_dir();
  write_bytes(dir / "bad.ntkf", ntkf_bytes(2, 2, {1, 1, 0, 1}));
  EXPECT_THROW(load_features(dir / "bad.ntkf"), InvariantError);
}

TEST(Tensorio, NormToleranceBoundary) {
  Matrix ok(2, 2);
  ok << 1.00005, 0, 0, 1;
  EXPECT_NO_THROW(FeatureMatrix::from_values(ok));
  Matrix bad(2, 2);
  bad << 1.0002, 0, 0, 1;
  EXPECT_THROW(FeatureMatrix::from_values(bad), InvariantError);
}

TEST(Tensorio, RejectsNonFinite) {
  const auto dir = test::scratch_dir();
  write_bytes(dir / "nan.ntkf", ntkf_bytes(2, 2, {1, 0, std::nanf(""), 1}));
  EXPECT_THROW(load_features(dir / "nan.ntkf"), Error);
  write_bytes(dir / "inf.ntkf", ntkf_bytes(2, 2, {1, 0, INFINITY, 1}));
  EXPECT_THROW(load_features(dir / "inf.ntkf"), Error);
}

TEST(Tensorio, RejectsBadHeader) {
  const auto dir = test::scratch_dir();
  std::string bytes = ntkf_bytes(2, 2, {1, 0, 0, 1});
  bytes[0] = 'X';
  write_bytes(dir / "magic.ntkf", bytes);
  EXPECT_THROW(load_features(dir / "magic.ntkf"), FormatError);
  write_bytes(dir / "version.ntkf", ntkf_bytes(2, 2, {1, 0, 0, 1}, 2));
  EXPECT_THROW(load_features(dir / "version.ntkf"), FormatError);
  bytes = ntkf_bytes(2, 2, {1, 0, 0, 1});
  bytes[6] = 1;
  write_bytes(dir / "reserved.ntkf", bytes);
  EXPECT_THROW(load_features(dir / "reserved.ntkf"), FormatError);
  write_bytes(dir / "short.ntkf", ntkf_bytes(2, 2, {1, 0, 0}));
  EXPECT_THROW(load_features(dir / "short.ntkf"), FormatError);
  write_bytes(dir / "long.ntkf", ntkf_bytes(2, 2, {1, 0, 0, 1, 0}));
  EXPECT_THROW(load_features(dir / "long.ntkf"), FormatError);
  write_bytes(dir / "trunc.ntkf", bytes.substr(0, 10));
  EXPECT_THROW(load_features(dir / "trunc.ntkf"), FormatError);
}

TEST(Tensorio, RejectsMissingFile) {
  EXPECT_THROW(load_features("/nonexistent/features.ntkf"), IoError);
}

TEST(Tensorio, WritesExactLayout) {
  const auto dir = test::scratch_dir();
  Matrix v(2, 3);
  v << 1, 0, 0, 0, 0.6, 0.8;
  save_features(FeatureMatrix::from_values(v), dir / "out.ntkf");
  EXPECT_EQ(read_bytes(dir / "out.ntkf"), ntkf_bytes(2, 3, {1, 0, 0, 0, 0.6f, 0.8f}));
  const NtkfHeader h = read_ntkf_header(dir / "out.ntkf");
  EXPECT_EQ(h.rows, 2u);
  EXPECT_EQ(h.cols, 3u);
}

TEST(Tensorio, RoundTripIsBitIdentical) {
  const auto dir = test::scratch_dir();
  std::mt19937_64 rng(1);
  const FeatureMatrix m = FeatureMatrix::from_values(oracle::random_unit_rows(rng, 37, 11));
  save_features(m, dir / "a.ntkf");
  const FeatureMatrix back = load_features(dir / "a.ntkf");
  EXPECT_TRUE(back == m);
  save_features(back, dir / "b.ntkf");
  EXPECT_EQ(read_bytes(dir / "a.ntkf"), read_bytes(dir / "b.ntkf"));
}

TEST(Tensorio, SaveToUnwritablePathFails) {
  Matrix v = Matrix::Identity(2, 2);
  EXPECT_THROW(save_features(FeatureMatrix::from_values(v), "/nonexistent/dir/x.ntkf"), IoError);
}

TEST(Tensorio, RejectsTooSmall) {
  EXPECT_THROW(FeatureMatrix::from_values(Matrix::Identity(1, 1)), InvariantError);
}

TEST(Tensorio, Labels) {
  const auto dir = test::scratch_dir();
  write_bytes(dir / "l.txt", "0\n1\n0\n");
  const LabelVector l = load_labels(dir / "l.txt");
  EXPECT_EQ(l.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(l.K, 2);
  write_bytes(dir / "neg.txt", "0\n-1\n");
  EXPECT_THROW(load_labels(dir / "neg.txt"), Error);
  write_bytes(dir / "word.txt", "0\nx\n");
  EXPECT_THROW(load_labels(dir / "word.txt"), Error);
  write_bytes(dir / "frac.txt", "0\n1.5\n");
  EXPECT_THROW(load_labels(dir / "frac.txt"), Error);
}

TEST(Tensorio, LabelRoundTrip) {
  const auto dir = test::scratch_dir();
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> u(0, 9);
  std::vector<int> raw(1000);
  for (auto& v : raw) v = u(rng);
  const LabelVector l = LabelVector::from_labels(raw);
  save_labels(l, dir / "l.txt");
  const LabelVector back = load_labels(dir / "l.txt");
  EXPECT_EQ(back.labels, raw);
  EXPECT_EQ(back.K, l.K);
}

TEST(Tensorio, AnchorBankRoundTripAndManifest) {
  const auto dir = test::scratch_dir();
  std::mt19937_64 rng(3);
  AnchorBank bank;
  for (int b = 0; b < 3; ++b) {
    bank.prompt_labels.push_back("a photo of a {} " + std::to_string(b));
    bank.banks.push_back(FeatureMatrix::from_values(oracle::random_unit_rows(rng, 5, 4)));
  }
  save_anchor_bank(bank, dir / "manifest.tsv");
  const AnchorBank back = load_anchor_bank(dir / "manifest.tsv");
  ASSERT_EQ(back.prompts(), 3);
  EXPECT_EQ(back.nouns(), 5);
  EXPECT_EQ(back.dim(), 4);
  for (int b = 0; b < 3; ++b) {
    EXPECT_EQ(back.prompt_labels[b], bank.prompt_labels[b]);
    EXPECT_TRUE(back.banks[b] == bank.banks[b]);
  }
  // Relative paths resolve against the manifest, not the working directory.
  const auto entries = read_anchor_manifest(dir / "manifest.tsv");
  for (const auto& e : entries) EXPECT_EQ(e.file.parent_path(), dir);
}

TEST(Tensorio, AnchorBankRejectsMismatch) {
  const auto dir = test::scratch_dir();
  std::mt19937_64 rng(4);
  save_features(FeatureMatrix::from_values(oracle::random_unit_rows(rng, 5, 4)), dir / "a.ntkf");
  save_features(FeatureMatrix::from_values(oracle::random_unit_rows(rng, 6, 4)), dir / "b.ntkf");
  write_bytes(dir / "m.tsv", "p0\ta.ntkf\np1\tb.ntkf\n");
  EXPECT_THROW(load_anchor_bank(dir / "m.tsv"), InvariantError);
  write_bytes(dir / "empty.tsv", "# nothing\n\n");
  EXPECT_THROW(load_anchor_bank(dir / "empty.tsv"), Error);
  write_bytes(dir / "nosep.tsv", "a.ntkf\n");
  EXPECT_THROW(load_anchor_bank(dir / "nosep.tsv"), FormatError);
}
