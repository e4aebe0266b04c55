#pragma once

#include "ntkc/tensorio.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ntkc {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct MetricReport {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  Index samples = 0;
  CountMatrix confusion;  // K_pred × K_true
};

/// confusion(p, t) = #{i : pred_i = p, truth_i = t}.
CountMatrix confusion_matrix(const LabelVector& pred, const LabelVector& truth);

/// Minimum-cost assignment of rows to columns (Hungarian, O(n³)). Rectangular
/// inputs are padded with zero-cost dummies. Entry r is the column assigned to
/// row r, or -1 when the row got a dummy.
std::vector<int> linear_assignment(const Matrix& cost);

/// Fraction of samples matched under the best one-to-one map from predicted
/// clusters to classes.
double accuracy(const LabelVector& pred, const LabelVector& truth);
double accuracy_from_confusion(const CountMatrix& confusion);

/// Mutual information over the arithmetic mean of the two entropies. Two
/// constant labelings score 1; one constant labeling scores 0.
double nmi(const LabelVector& pred, const LabelVector& truth);

/// Pair-counting Rand index adjusted for chance, in exact integer arithmetic
/// up to the final division. Returns 1 when the chance-adjusted denominator
/// vanishes (both labelings trivial and identical).
double ari(const LabelVector& pred, const LabelVector& truth);

MetricReport evaluate(const LabelVector& pred, const LabelVector& truth);

/// "key=value" lines: acc, nmi, ari, samples, k_pred, k_true.
std::string format_report(const MetricReport& report);
std::string report_csv_header();
std::string report_csv_row(const MetricReport& report);

/// label_i = argmax_k class_anchors_k · feats_i, lowest index on ties. The
/// temperature does not change the argmax; it is validated only.
LabelVector zero_shot_assign(const Matrix& feats, const Matrix& class_anchors, double tau);

}  // namespace ntkc
