#include "ntkc/eval.hpp"

#include "ntkc/error.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace ntkc {
namespace {

void check_lengths(const LabelVector& pred, const LabelVector& truth) {
  if (pred.size() != truth.size())
    throw InvariantError("label length mismatch: " + std::to_string(pred.size()) + " vs " +
                         std::to_string(truth.size()));
  if (pred.size() == 0) throw InvariantError("labelings are empty");
}

double entropy(const std::vector<std::int64_t>& counts, double n) {
  double h = 0.0;
  for (auto c : counts)
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
  return h;
}

std::int64_t pairs(std::int64_t n) { return n * (n - 1) / 2; }

__extension__ typedef __int128 wide_int;

}  // namespace

CountMatrix confusion_matrix(const LabelVector& pred, const LabelVector& truth) {
  check_lengths(pred, truth);
  CountMatrix c = CountMatrix::Zero(std::max(pred.K, 1), std::max(truth.K, 1));
  for (Index i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= c.rows() || truth[i] < 0 || truth[i] >= c.cols())
      throw InvariantError("label out of range at sample " + std::to_string(i));
    ++c(pred[i], truth[i]);
  }
  return c;
}

std::vector<int> linear_assignment(const Matrix& cost) {
  const Index rows = cost.rows();
  const Index n = std::max(cost.rows(), cost.cols());
  Matrix a = Matrix::Zero(n, n);
  a.topLeftCorner(cost.rows(), cost.cols()) = cost;

  // Potentials formulation; 1-based with a virtual column 0.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> match(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), kInf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = match[static_cast<std::size_t>(j0)];
      double delta = kInf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = a(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assignment(static_cast<std::size_t>(rows), -1);
  for (Index j = 1; j <= n; ++j) {
    const Index i = match[static_cast<std::size_t>(j)];
    if (i >= 1 && i <= rows && j <= cost.cols())
      assignment[static_cast<std::size_t>(i - 1)] = static_cast<int>(j - 1);
  }
  return assignment;
}

double accuracy_from_confusion(const CountMatrix& confusion) {
  const std::int64_t total = confusion.sum();
  if (total <= 0) throw InvariantError("empty confusion matrix");
  const Matrix cost = -confusion.cast<double>();
  const std::vector<int> assignment = linear_assignment(cost);
  std::int64_t matched = 0;
  for (std::size_t r = 0; r < assignment.size(); ++r)
    if (assignment[r] >= 0) matched += confusion(static_cast<Index>(r), assignment[r]);
  return static_cast<double>(matched) / static_cast<double>(total);
}

double accuracy(const LabelVector& pred, const LabelVector& truth) {
  return accuracy_from_confusion(confusion_matrix(pred, truth));
}

double nmi(const LabelVector& pred, const LabelVector& truth) {
  const CountMatrix c = confusion_matrix(pred, truth);
  const double n = static_cast<double>(pred.size());
  std::vector<std::int64_t> rows(static_cast<std::size_t>(c.rows())), cols(static_cast<std::size_t>(c.cols()));
  for (Index p = 0; p < c.rows(); ++p) rows[static_cast<std::size_t>(p)] = c.row(p).sum();
  for (Index t = 0; t < c.cols(); ++t) cols[static_cast<std::size_t>(t)] = c.col(t).sum();
  const double hp = entropy(rows, n);
  const double ht = entropy(cols, n);
  if (hp == 0.0 && ht == 0.0) return 1.0;
  if (hp == 0.0 || ht == 0.0) return 0.0;
  double mi = 0.0;
  for (Index p = 0; p < c.rows(); ++p)
    for (Index t = 0; t < c.cols(); ++t) {
      if (c(p, t) == 0) continue;
      const double joint = static_cast<double>(c(p, t));
      mi += joint / n *
            std::log(joint * n /
                     (static_cast<double>(rows[static_cast<std::size_t>(p)]) *
                      static_cast<double>(cols[static_cast<std::size_t>(t)])));
    }
  return std::clamp(mi / (0.5 * (hp + ht)), 0.0, 1.0);
}

double ari(const LabelVector& pred, const LabelVector& truth) {
  const CountMatrix c = confusion_matrix(pred, truth);
  const std::int64_t n = pred.size();
  std::int64_t index = 0, sum_rows = 0, sum_cols = 0;
  for (Index p = 0; p < c.rows(); ++p)
    for (Index t = 0; t < c.cols(); ++t) index += pairs(c(p, t));
  for (Index p = 0; p < c.rows(); ++p) sum_rows += pairs(c.row(p).sum());
  for (Index t = 0; t < c.cols(); ++t) sum_cols += pairs(c.col(t).sum());
  const wide_int total = pairs(n);
  // ARI = (index - rows·cols/total) / (½(rows+cols) - rows·cols/total),
  // multiplied through by 2·total to stay in integers.
  const wide_int rc = wide_int{sum_rows} * sum_cols;
  const wide_int numerator = 2 * (total * index - rc);
  const wide_int denominator = total * (sum_rows + sum_cols) - 2 * rc;
  if (denominator == 0) return 1.0;
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

MetricReport evaluate(const LabelVector& pred, const LabelVector& truth) {
  MetricReport r;
  r.confusion = confusion_matrix(pred, truth);
  r.acc = accuracy_from_confusion(r.confusion);
  r.nmi = nmi(pred, truth);
  r.ari = ari(pred, truth);
  r.samples = pred.size();
  return r;
}

std::string format_report(const MetricReport& report) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "acc=" << report.acc << '\n'
      << "nmi=" << report.nmi << '\n'
      << "ari=" << report.ari << '\n'
      << "samples=" << report.samples << '\n'
      << "k_pred=" << report.confusion.rows() << '\n'
      << "k_true=" << report.confusion.cols() << '\n';
  return out.str();
}

std::string report_csv_header() { return "acc,nmi,ari,samples,k_pred,k_true"; }

std::string report_csv_row(const MetricReport& report) {
  std::ostringstream out;
  out << std::setprecision(17) << report.acc << ',' << report.nmi << ',' << report.ari << ','
      << report.samples << ',' << report.confusion.rows() << ',' << report.confusion.cols();
  return out.str();
}

LabelVector zero_shot_assign(const Matrix& feats, const Matrix& class_anchors, double tau) {
  if (!(tau > 0.0)) throw InvariantError("temperature must be positive");
  if (feats.cols() != class_anchors.cols())
    throw InvariantError("zero_shot_assign: dimension mismatch");
  if (class_anchors.rows() < 1) throw InvariantError("zero_shot_assign: no class anchors");
  const Matrix logits = feats * class_anchors.transpose();
  std::vector<int> labels(static_cast<std::size_t>(feats.rows()));
  for (Index i = 0; i < logits.rows(); ++i) {
    Index best = 0;
    for (Index k = 1; k < logits.cols(); ++k)
      if (logits(i, k) > logits(i, best)) best = k;
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return LabelVector{std::move(labels), static_cast<int>(class_anchors.rows())};
}

}  // namespace ntkc
