#include <benchmark/benchmark.h>

#include "hopwise/dataset.hpp"
#include "hopwise/gnn.hpp"
#include "hopwise/synthetic.hpp"
#include "hopwise/trainer.hpp"

using namespace hopwise;

namespace {

// Users and items each get n_edges / 10 nodes at degree 10.
Graph scaling_graph(std::size_t n_edges) {
  Dataset d = scaling_dataset(n_edges, 10, 11);
  return build_train_graph(d);
}

void BM_Propagate(benchmark::State& state) {
  Graph g = scaling_graph(static_cast<std::size_t>(state.range(0)));
  Rng rng(3);
  GnnParams p = GnnParams::init(g.n_nodes(), 64, rng);
  for (auto _ : state) {
    EmbeddingTable t = propagate(g, p, 4);
    benchmark::DoNotOptimize(t.layers.back().data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Propagate)->Arg(10'000)->Arg(40'000)->Arg(160'000)->Complexity(benchmark::oN)
    ->Unit(benchmark::kMillisecond);

void BM_KhopIndexBuild(benchmark::State& state) {
  Dataset d = scaling_dataset(static_cast<std::size_t>(state.range(0)), 10, 11);
  for (auto _ : state) {
    Graph g = build_train_graph(d);
    benchmark::DoNotOptimize(g.has_khop_index());
  }
}
BENCHMARK(BM_KhopIndexBuild)->Arg(2'000)->Arg(8'000)->Unit(benchmark::kMillisecond);

void BM_KhopLookup(benchmark::State& state) {
  Dataset d = scaling_dataset(20'000, 10, 11);
  GraphOptions opts;
  opts.index_node_threshold = state.range(0) ? 100'000 : 0;
  Graph g = build_train_graph(d, opts);
  std::vector<std::uint32_t> storage;
  std::uint32_t u = 0;
  for (auto _ : state) {
    auto ball = g.same_kind_within(user_node(u), 2, storage);
    benchmark::DoNotOptimize(ball.data());
    u = (u + 1) % g.n_users();
  }
  state.SetLabel(state.range(0) ? "index" : "bfs");
}
BENCHMARK(BM_KhopLookup)->Arg(1)->Arg(0);

void BM_Epoch(benchmark::State& state) {
  Dataset d = scaling_dataset(static_cast<std::size_t>(state.range(0)), 10, 11);
  Graph g = build_train_graph(d);
  TrainConfig cfg;
  cfg.epochs = 1'000'000;
  Trainer trainer(g, d.split.validation, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.run_epoch().bpr_loss);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Epoch)->Arg(10'000)->Arg(40'000)->Arg(160'000)->Complexity(benchmark::oN)
    ->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
