#include "ntkc/error.hpp"
#include "ntkc/eval.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace ntkc;

namespace {

LabelVector lv(std::vector<int> v) { return LabelVector::from_labels(std::move(v)); }

// Labelings realizing a given confusion (rows = pred, cols = truth).
std::pair<LabelVector, LabelVector> from_confusion(const std::vector<std::vector<int>>& c) {
  std::vector<int> pred, truth;
  for (std::size_t p = 0; p < c.size(); ++p)
    for (std::size_t t = 0; t < c[p].size(); ++t)
      for (int n = 0; n < c[p][t]; ++n) {
        pred.push_back(static_cast<int>(p));
        truth.push_back(static_cast<int>(t));
      }
  return {lv(pred), lv(truth)};
}

}  // namespace

TEST(Accuracy, GoldenConfusion) {
  const auto [pred, truth] = from_confusion({{5, 1}, {2, 4}});
  EXPECT_EQ(accuracy(pred, truth), 0.75);
  CountMatrix c(2, 2);
  c << 5, 1, 2, 4;
  EXPECT_EQ(accuracy_from_confusion(c), 0.75);
  EXPECT_EQ(oracle::permutation_accuracy(pred.labels, truth.labels), 0.75);
}

TEST(Accuracy, IdentityAndPermutation) {
  const LabelVector t = lv({0, 1, 2, 2, 1, 0, 0});
  EXPECT_EQ(accuracy(t, t), 1.0);
  EXPECT_EQ(accuracy(lv({2, 0, 1, 1, 0, 2, 2}), t), 1.0);
}

TEST(Accuracy, RectangularConfusion) {
  // Three predicted clusters against two classes.
  const LabelVector pred = lv({0, 0, 1, 1, 2, 2});
  const LabelVector truth = lv({0, 0, 1, 1, 1, 1});
  EXPECT_NEAR(accuracy(pred, truth), 4.0 / 6.0, 1e-15);
  EXPECT_NEAR(accuracy(truth, pred), 4.0 / 6.0, 1e-15);
}

TEST(Accuracy, HungarianIsOptimalOnSmallK) {
  std::mt19937_64 rng(70);
  for (int t = 0; t < 200; ++t) {
    const int k = 2 + t % 5;
    std::uniform_int_distribution<int> u(0, k - 1);
    std::vector<int> p(30), q(30);
    for (auto& v : p) v = u(rng);
    for (auto& v : q) v = u(rng);
    const double got = accuracy(lv(p), lv(q));
    EXPECT_EQ(got, oracle::permutation_accuracy(p, q));
    EXPECT_EQ(got * 30.0, std::round(got * 30.0));
  }
}

TEST(Accuracy, LengthMismatch) {
  EXPECT_THROW(accuracy(lv({0, 1}), lv({0, 1, 0})), InvariantError);
  EXPECT_THROW(nmi(lv({0, 1}), lv({0, 1, 0})), InvariantError);
  EXPECT_THROW(ari(lv({0, 1}), lv({0, 1, 0})), InvariantError);
}

TEST(LinearAssignment, PadsWithDummies) {
  Matrix cost(2, 3);
  cost << 4, 1, 3, 2, 0, 5;
  const std::vector<int> a = linear_assignment(cost);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(cost(0, a[0]) + cost(1, a[1]), 3.0);  // minimum total cost
}

TEST(Nmi, GoldenValues) {
  const LabelVector t = lv({0, 0, 1, 1, 2});
  EXPECT_EQ(nmi(t, t), 1.0);
  EXPECT_EQ(nmi(lv({0, 0, 0}), lv({1, 1, 1})), 1.0);
  EXPECT_EQ(nmi(lv({0, 0, 0, 0}), lv({0, 1, 0, 1})), 0.0);
  // Contingency [[3,1],[1,3]] by hand.
  const auto [pred, truth] = from_confusion({{3, 1}, {1, 3}});
  const double mi = 2 * (3.0 / 8) * std::log((3.0 / 8) / 0.25) + 2 * (1.0 / 8) * std::log((1.0 / 8) / 0.25);
  EXPECT_NEAR(nmi(pred, truth), mi / std::log(2.0), 1e-15);
}

TEST(Nmi, IndependentLabelsNearZero) {
  std::mt19937_64 rng(71);
  std::uniform_int_distribution<int> u(0, 4);
  std::vector<int> p(10000), q(10000);
  for (auto& v : p) v = u(rng);
  for (auto& v : q) v = u(rng);
  EXPECT_LE(nmi(lv(p), lv(q)), 0.05);
}

TEST(Ari, GoldenValues) {
  const LabelVector t = lv({0, 0, 1, 1, 2, 2});
  EXPECT_EQ(ari(t, t), 1.0);
  EXPECT_EQ(ari(lv({0, 0, 0, 0}), lv({0, 0, 1, 1})), 0.0);
}

TEST(Metrics, ExhaustiveSmallLabelings) {
  for (int m = 2; m <= 6; ++m)
    for (const auto& p : oracle::all_labelings(m, 3))
      for (const auto& q : oracle::all_labelings(m, 2)) {
        EXPECT_EQ(ari(lv(p), lv(q)), oracle::pair_counting_ari(p, q));
        EXPECT_NEAR(nmi(lv(p), lv(q)), oracle::entropy_nmi(p, q), 1e-12);
        EXPECT_EQ(accuracy(lv(p), lv(q)), oracle::permutation_accuracy(p, q));
      }
}

TEST(Metrics, RelabelingInvariance) {
  std::mt19937_64 rng(72);
  std::uniform_int_distribution<int> u(0, 3);
  std::vector<int> p(50), q(50);
  for (auto& v : p) v = u(rng);
  for (auto& v : q) v = u(rng);
  std::vector<int> perm{2, 0, 3, 1};
  std::vector<int> pp(50);
  for (std::size_t i = 0; i < 50; ++i) pp[i] = perm[static_cast<std::size_t>(p[i])];
  EXPECT_EQ(accuracy(lv(p), lv(q)), accuracy(lv(pp), lv(q)));
  EXPECT_EQ(ari(lv(p), lv(q)), ari(lv(pp), lv(q)));
  EXPECT_NEAR(nmi(lv(p), lv(q)), nmi(lv(pp), lv(q)), 1e-15);
}

TEST(Report, FormatsAndConfusionSums) {
  const LabelVector pred = lv({0, 0, 1, 1, 1});
  const LabelVector truth = lv({1, 1, 0, 0, 1});
  const MetricReport r = evaluate(pred, truth);
  EXPECT_EQ(r.samples, 5);
  EXPECT_EQ(r.confusion.sum(), 5);
  EXPECT_EQ(r.confusion.row(1).sum(), 3);
  EXPECT_EQ(r.confusion.col(1).sum(), 3);
  EXPECT_EQ(r.acc, 0.8);
  const std::string text = format_report(r);
  EXPECT_NE(text.find("acc=0.80000000000000004\n"), std::string::npos);
  EXPECT_NE(text.find("samples=5\n"), std::string::npos);
  EXPECT_EQ(report_csv_header(), "acc,nmi,ari,samples,k_pred,k_true");
  EXPECT_EQ(report_csv_row(r).substr(0, 20), "0.80000000000000004,");
}

TEST(ZeroShot, MatchesSoftmaxArgmax) {
  std::mt19937_64 rng(73);
  const Matrix feats = oracle::random_unit_rows(rng, 60, 7);
  const Matrix anchors = oracle::random_unit_rows(rng, 5, 7);
  const LabelVector l = zero_shot_assign(feats, anchors, 0.04);
  for (Index i = 0; i < 60; ++i) {
    Vector p(5);
    for (Index k = 0; k < 5; ++k) p(k) = std::exp(feats.row(i).dot(anchors.row(k)) / 0.04);
    p /= p.sum();
    Index arg;
    p.maxCoeff(&arg);
    EXPECT_EQ(l[i], arg);
  }
  EXPECT_EQ(zero_shot_assign(feats, anchors, 1.0).labels, l.labels);
}

TEST(ZeroShot, ExactAnchorAndTies) {
  Matrix anchors(3, 2);
  anchors << 1, 0, 0, 1, -1, 0;
  Matrix feats(2, 2);
  feats << -1, 0, std::sqrt(0.5), std::sqrt(0.5);
  const LabelVector l = zero_shot_assign(feats, anchors, 0.1);
  EXPECT_EQ(l[0], 2);
  EXPECT_EQ(l[1], 0);  // tie between anchors 0 and 1
  EXPECT_THROW(zero_shot_assign(feats, Matrix::Identity(3, 3), 0.1), InvariantError);
  EXPECT_THROW(zero_shot_assign(feats, anchors, 0.0), InvariantError);
}
