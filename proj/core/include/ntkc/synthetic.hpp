#pragma once

#include "ntkc/tensorio.hpp"

#include <cstdint>
#include <random>

namespace ntkc {

/// Platform-independent standard normal stream (std::normal_distribution is
/// implementation-defined, so fixtures would differ across standard libraries).
class PortableGaussian {
 public:
  explicit PortableGaussian(std::uint64_t seed) : engine_(seed) {}
  double operator()();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Noisy clusters on the unit sphere with text-like anchors per cluster.
struct SyntheticSpec {
  int clusters = 3;
  int per_cluster = 60;
  int dim = 16;
  int anchors_per_cluster = 4;
  int prompts = 3;
  double center_overlap = 2.0;  // weight of a direction shared by all centers
  double point_noise = 0.45;   // isotropic, before re-normalization
  double anchor_noise = 0.25;  // anchors around their cluster center
  double prompt_noise = 0.15;  // per-prompt perturbation of each anchor
  std::uint64_t seed = 7;
};

struct SyntheticData {
  FeatureMatrix features;  // clusters·per_cluster × dim, grouped by cluster
  LabelVector labels;
  AnchorBank anchors;      // prompts banks of clusters·anchors_per_cluster rows
  Matrix centers;          // clusters × dim
};

SyntheticData make_sphere_clusters(const SyntheticSpec& spec);

}  // namespace ntkc
