// Throughput of the hot paths: scoring against memory, one Q-network
// evaluation, and a full online pass over a synthetic movie.
#include <benchmark/benchmark.h>

#include "oms/controller.hpp"
#include "oms/engine.hpp"
#include "oms/qnetwork.hpp"
#include "oms/rng.hpp"
#include "oms/synthetic.hpp"

namespace {

oms::MovieStream bench_movie(std::size_t instances, std::size_t casts, std::size_t dim) {
  oms::SyntheticParams p;
  p.movies = 1;
  p.instances = instances;
  p.casts = casts;
  p.dim = dim;
  p.seed = 7;
  return oms::generate_synthetic(p).front();
}

void BM_Predict(benchmark::State& state) {
  const auto movie = bench_movie(64, static_cast<std::size_t>(state.range(0)), 128);
  const auto bank = oms::MemoryBank::init(movie.casts);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bank.predict(movie.instances[i].feature));
    i = (i + 1) % movie.instances.size();
  }
}
BENCHMARK(BM_Predict)->Arg(6)->Arg(32);

void BM_QForward(benchmark::State& state) {
  oms::Rng rng(1);
  const std::size_t in = static_cast<std::size_t>(state.range(0));
  const auto net = oms::QNetwork::random(in, 64, rng);
  std::vector<double> s(in);
  for (auto& x : s) x = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(s));
}
BENCHMARK(BM_QForward)->Arg(10)->Arg(96);

void BM_RunMovie(benchmark::State& state) {
  const auto movie = bench_movie(static_cast<std::size_t>(state.range(0)), 6, 16);
  const oms::ManualPolicy policy(oms::ManualControllerConfig{});
  const oms::EngineConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(oms::run_movie(movie, policy, config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunMovie)->Arg(400)->Arg(2000);

}  // namespace
BENCHMARK_MAIN();
