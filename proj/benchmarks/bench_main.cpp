#include <benchmark/benchmark.h>

#include "fedmrl/data.hpp"
#include "fedmrl/federation.hpp"
#include "fedmrl/mrl.hpp"

namespace {

using namespace fedmrl;

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix a = random_matrix(n, n, rng);
  const Matrix b = random_matrix(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_FusionStep(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  auto g = make_global_model({128, {32}, 4, 10}, rng);
  auto f = make_local_model({128, {64}, 16, 10}, rng);
  auto p = make_projector(4, 16, rng);
  const Matrix x = random_matrix(batch, 128, rng);
  std::vector<std::size_t> labels(batch);
  for (auto& l : labels) l = rng.uniform_int(10);
  for (auto _ : state) {
    auto pass = forward_loss(g, f, p, x, labels);
    backward_and_step(g, f, p, pass.cache, LearningRates::uniform(1e-4));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_FusionStep)->Arg(8)->Arg(32)->Arg(128);

void BM_Round(benchmark::State& state) {
  Rng rng(3);
  const auto ds = gen_synthetic(10, 128, 100, 5.0, rng);
  const auto plan = split_train_test(partition_class_count(ds, 10, {2}, 3), 3);
  RunConfig cfg;
  cfg.batch_size = 8;
  cfg.lrs = LearningRates::uniform(0.02);
  Simulation sim(cfg, ds, plan);
  for (auto _ : state) benchmark::DoNotOptimize(sim.step());
}
BENCHMARK(BM_Round)->Unit(benchmark::kMillisecond);

void BM_PartitionDirichlet(benchmark::State& state) {
  Rng rng(4);
  const auto ds = gen_synthetic(10, 4, 1000, 1.0, rng);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(partition_dirichlet(ds, 100, {0.5}, ++seed, 5));
}
BENCHMARK(BM_PartitionDirichlet)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
