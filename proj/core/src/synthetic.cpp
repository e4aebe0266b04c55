#include "ntkc/synthetic.hpp"

#include "ntkc/error.hpp"

#include <cmath>
#include <numbers>

namespace ntkc {

double PortableGaussian::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 53-bit uniforms in (0, 1].
  const auto uniform = [&] {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  };
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

namespace {

Vector unit(Vector v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw NumericError("synthetic vector has zero norm");
  return v / n;
}

Vector gaussian(PortableGaussian& g, Index d) {
  Vector v(d);
  for (Index c = 0; c < d; ++c) v(c) = g();
  return v;
}

}  // namespace

SyntheticData make_sphere_clusters(const SyntheticSpec& spec) {
  if (spec.clusters < 1 || spec.per_cluster < 1 || spec.dim < 2 || spec.anchors_per_cluster < 1 ||
      spec.prompts < 1)
    throw InvariantError("synthetic spec sizes must be positive");
  PortableGaussian g(spec.seed);
  const Index d = spec.dim;
  const double noise_scale = 1.0 / std::sqrt(static_cast<double>(d));

  const Vector shared = unit(gaussian(g, d));
  Matrix centers(spec.clusters, d);
  for (int k = 0; k < spec.clusters; ++k)
    centers.row(k) = unit(spec.center_overlap * shared + unit(gaussian(g, d))).transpose();

  const Index m = static_cast<Index>(spec.clusters) * spec.per_cluster;
  Matrix feats(m, d);
  std::vector<int> labels(static_cast<std::size_t>(m));
  for (int k = 0; k < spec.clusters; ++k)
    for (int i = 0; i < spec.per_cluster; ++i) {
      const Index row = static_cast<Index>(k) * spec.per_cluster + i;
      const Vector noisy =
          centers.row(k).transpose() + spec.point_noise * noise_scale * gaussian(g, d);
      feats.row(row) = unit(noisy).transpose();
      labels[static_cast<std::size_t>(row)] = k;
    }

  const Index n = static_cast<Index>(spec.clusters) * spec.anchors_per_cluster;
  Matrix base(n, d);
  for (int k = 0; k < spec.clusters; ++k)
    for (int a = 0; a < spec.anchors_per_cluster; ++a)
      base.row(static_cast<Index>(k) * spec.anchors_per_cluster + a) =
          unit(centers.row(k).transpose() + spec.anchor_noise * noise_scale * gaussian(g, d))
              .transpose();

  SyntheticData out;
  out.centers = centers;
  out.features = FeatureMatrix::from_values(std::move(feats));
  out.labels = LabelVector::from_labels(std::move(labels));
  for (int b = 0; b < spec.prompts; ++b) {
    Matrix bank(n, d);
    for (Index r = 0; r < n; ++r)
      bank.row(r) =
          unit(base.row(r).transpose() + spec.prompt_noise * noise_scale * gaussian(g, d)).transpose();
    out.anchors.prompt_labels.push_back("prompt_" + std::to_string(b));
    out.anchors.banks.push_back(FeatureMatrix::from_values(std::move(bank)));
  }
  return out;
}

}  // namespace ntkc
