// Writes the synthetic NTKF fixtures used by the test suites.
//
//   make_fixtures <output_dir>

#include "ntkc/synthetic.hpp"
#include "ntkc/tensorio.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace {

void write_config(const fs::path& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <output_dir>\n";
    return 2;
  }
  try {
    const fs::path dir = argv[1];
    fs::create_directories(dir);

    // 3 clusters × 60 points, d=16, 12 anchors, 3 prompt banks.
    const ntkc::SyntheticData data = ntkc::make_sphere_clusters(ntkc::SyntheticSpec{});
    ntkc::save_features(data.features, dir / "sphere_features.ntkf");
    ntkc::save_labels(data.labels, dir / "sphere_labels.txt");
    ntkc::save_anchor_bank(data.anchors, dir / "sphere_anchors.tsv", "sphere_bank");

    ntkc::AnchorBank single;
    single.prompt_labels = {data.anchors.prompt_labels.front()};
    single.banks = {data.anchors.banks.front()};
    ntkc::save_anchor_bank(single, dir / "sphere_anchors_single.tsv", "sphere_bank_single");

    // Tight blobs for the k-means baseline.
    ntkc::SyntheticSpec blobs;
    blobs.per_cluster = 20;
    blobs.dim = 8;
    blobs.center_overlap = 0.0;
    blobs.point_noise = 0.1;
    blobs.anchors_per_cluster = 1;
    blobs.prompts = 1;
    blobs.seed = 11;
    const ntkc::SyntheticData b = ntkc::make_sphere_clusters(blobs);
    ntkc::save_features(b.features, dir / "blobs_features.ntkf");
    ntkc::save_labels(b.labels, dir / "blobs_labels.txt");
    ntkc::save_anchor_bank(b.anchors, dir / "blobs_anchors.tsv", "blobs_bank");

    write_config(dir / "sphere.cfg",
                 "# ntk_rad on the sphere fixture\n"
                 "features=sphere_features.ntkf\n"
                 "anchors=sphere_anchors.tsv\n"
                 "labels=sphere_labels.txt\n"
                 "k=3\n"
                 "method=ntk_rad\n"
                 "tau=0.04\n"
                 "q=10\n"
                 "mu=0.1\n"
                 "lambda=10\n"
                 "seed=0\n"
                 "out=out\n");
    write_config(dir / "blobs.cfg",
                 "features=blobs_features.ntkf\n"
                 "labels=blobs_labels.txt\n"
                 "k=3\n"
                 "method=kmeans_baseline\n"
                 "seed=0\n"
                 "out=out\n");
    std::cout << "fixtures written to " << dir.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
