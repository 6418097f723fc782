// Parallel kernels against their serial references on a fixed random graph.
// Worker count follows BPLP_WORKERS / OMP_NUM_THREADS.

#include <random>

#include <benchmark/benchmark.h>

#include "bplp/features.hpp"
#include "bplp/parallel.hpp"
#include "bplp/recsys.hpp"
#include "bplp/reference.hpp"
#include "bplp/scores.hpp"

using namespace bplp;

namespace {

const BipartiteGraph& graph() {
  static const BipartiteGraph g = [] {
    std::mt19937_64 rng(2024);
    std::bernoulli_distribution coin(0.04);
    std::vector<Pair> edges;
    for (NodeId u = 0; u < 600; ++u)
      for (NodeId v = 0; v < 900; ++v)
        if (coin(rng)) edges.push_back({u, v});
    return BipartiteGraph::from_edges(600, 900, std::move(edges));
  }();
  return g;
}

const PairList& pairs() {
  static const PairList p = candidate_pairs(graph());
  return p;
}

const EmbeddingTable& embeddings() {
  static const EmbeddingTable e = [] {
    TrainConfig c;
    c.init_stddev = 1.0;
    return initial_embeddings(graph(), c);
  }();
  return e;
}

void BM_PathIndexL5(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(score_path_index(graph(), pairs(), 5));
}
void BM_PathIndexL5Reference(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(reference::path_index(graph(), pairs(), 5));
}

void BM_Katz(benchmark::State& s) {
  KatzParams p;
  p.tolerance = 0.0;  // same work as the reference
  for (auto _ : s) benchmark::DoNotOptimize(score_katz(graph(), p, pairs()));
}
void BM_KatzReference(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(reference::katz(graph(), 0.001, 21, pairs()));
}

void BM_Dist(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(score_dist(graph(), pairs()));
}
void BM_DistReference(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(reference::dist(graph(), pairs()));
}

void BM_Closeness(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(closeness_centrality(graph()));
}
void BM_ClosenessReference(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(reference::closeness(graph()));
}

void BM_Betweenness(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(betweenness_centrality(graph()));
}
void BM_BetweennessReference(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(reference::betweenness(graph()));
}

void BM_Propagate(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(propagate_lightgcn(embeddings(), graph(), 3));
}
void BM_PropagateReference(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(reference::propagate(embeddings(), graph(), 3));
}

}  // namespace

BENCHMARK(BM_PathIndexL5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PathIndexL5Reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Katz)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KatzReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dist)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DistReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Closeness)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClosenessReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Betweenness)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BetweennessReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Propagate)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PropagateReference)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  configure_workers_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
