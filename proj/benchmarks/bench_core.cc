#include <benchmark/benchmark.h>

#include "charnmt/autodiff.hpp"
#include "charnmt/rng.hpp"
#include "charnmt/tensor.hpp"

namespace {

charnmt::Tensor random_tensor(charnmt::Shape shape, charnmt::Rng& rng) {
  charnmt::Tensor t(std::move(shape));
  for (double& x : t.data) x = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_matmul(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  charnmt::Rng rng(1);
  charnmt::Tensor a = random_tensor({n, n}, rng);
  charnmt::Tensor b = random_tensor({n, n}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(charnmt::kernels::matmul(a, b));
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_matmul_nt(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  charnmt::Rng rng(1);
  charnmt::Tensor a = random_tensor({n, n}, rng);
  charnmt::Tensor w = random_tensor({n, n}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(charnmt::kernels::matmul_nt(a, w));
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_matmul_nt)->Arg(64)->Arg(128)->Arg(256);

void BM_backward_chain(benchmark::State& state) {
  charnmt::Rng rng(2);
  charnmt::Tensor x0 = random_tensor({64, 64}, rng);
  charnmt::Tensor w0 = random_tensor({64, 64}, rng);
  for (auto _ : state) {
    charnmt::Graph g;
    charnmt::Var x = g.leaf(x0);
    charnmt::Var w = g.leaf(w0);
    charnmt::Var h = x;
    for (int i = 0; i < 8; ++i) h = g.tanh(g.matmul_nt(h, w));
    charnmt::Var root = g.reduce_sum(h);
    benchmark::DoNotOptimize(charnmt::backward(g, root));
  }
}
BENCHMARK(BM_backward_chain);

}  // namespace

BENCHMARK_MAIN();
