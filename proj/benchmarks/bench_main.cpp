// Throughput of the hot paths on generated sphere clusters.

#include "ntkc/graph.hpp"
#include "ntkc/kernels.hpp"
#include "ntkc/rad.hpp"
#include "ntkc/spectral.hpp"
#include "ntkc/synthetic.hpp"

#include <benchmark/benchmark.h>

using namespace ntkc;

namespace {

SyntheticData dataset(Index m) {
  SyntheticSpec spec;
  spec.per_cluster = static_cast<int>(m / spec.clusters);
  spec.dim = 64;
  return make_sphere_clusters(spec);
}

void BM_NtkBlock(benchmark::State& state) {
  const SyntheticData d = dataset(state.range(0));
  const PairwiseKernel k(d.features.values(), KernelSpec{}, &d.anchors.banks[0].values());
  for (auto _ : state) benchmark::DoNotOptimize(k.block(0, 128));
  state.SetItemsProcessed(state.iterations() * 128 * k.size());
}
BENCHMARK(BM_NtkBlock)->Arg(1024)->Arg(8192);

void BM_BuildAffinity(benchmark::State& state) {
  const SyntheticData d = dataset(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(build_affinity(d.features, KernelSpec{}, &d.anchors.banks[0].values(), 10));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildAffinity)->RangeMultiplier(4)->Range(256, 4096)->Unit(benchmark::kMillisecond)->Complexity();

std::vector<NormalizedAffinity> graphs(const SyntheticData& d) {
  std::vector<NormalizedAffinity> S;
  for (const auto& bank : d.anchors.banks) S.push_back(normalize(build_affinity(d.features, KernelSpec{}, &bank.values(), 10)));
  return S;
}

void BM_UpdateAffinityDense(benchmark::State& state) {
  const SyntheticData d = dataset(state.range(0));
  const auto S = graphs(d);
  const Vector beta = Vector::Constant(static_cast<Index>(S.size()), 1.0 / static_cast<double>(S.size()));
  const SparseMatrix E = identity_reference(d.features.rows());
  RadConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(update_affinity(Matrix(E), S, beta, E, cfg));
}
BENCHMARK(BM_UpdateAffinityDense)->Arg(300)->Arg(1200)->Unit(benchmark::kMillisecond);

void BM_UpdateAffinityPattern(benchmark::State& state) {
  const SyntheticData d = dataset(state.range(0));
  const auto S = graphs(d);
  const Vector beta = Vector::Constant(static_cast<Index>(S.size()), 1.0 / static_cast<double>(S.size()));
  const SparseMatrix E = identity_reference(d.features.rows());
  const SparseMatrix start = diffusion_pattern(S) + E;
  RadConfig cfg;
  cfg.pattern_restricted = true;
  for (auto _ : state) benchmark::DoNotOptimize(update_affinity(start, S, beta, E, cfg));
}
BENCHMARK(BM_UpdateAffinityPattern)->Arg(300)->Arg(1200)->Arg(4800)->Unit(benchmark::kMillisecond);

void BM_SpectralEmbed(benchmark::State& state) {
  const SyntheticData d = dataset(state.range(0));
  const SparseAffinity a = build_affinity(d.features, KernelSpec{}, &d.anchors.banks[0].values(), 10);
  for (auto _ : state) benchmark::DoNotOptimize(spectral_embed(a, 3));
}
// 1200 takes the dense path, 6000 the iterative one.
BENCHMARK(BM_SpectralEmbed)->Arg(1200)->Arg(6000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
