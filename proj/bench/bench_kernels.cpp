// Copyright 2026 The LGNSDE Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference loops against the OpenMP kernels, plus end-to-end
// predictive sampling at a Cora-like scale.
//
//   ./bench_kernels --benchmark_filter=Gemm
//   OMP_NUM_THREADS=4 ./bench_kernels

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "lgnsde/graph.hpp"
#include "lgnsde/kernels.hpp"
#include "lgnsde/model.hpp"

namespace {

using namespace lgnsde;

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

template <bool Parallel>
void BM_GemmNN(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 64, n = 64;
  const auto a = random_values(m * k, 1), b = random_values(k * n, 2);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    std::fill(c.begin(), c.end(), 0.0);
    if constexpr (Parallel) kernels::gemm_nn(a, b, c, m, k, n);
    else kernels::serial::gemm_nn(a, b, c, m, k, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * k * n));
}

template <bool Parallel>
void BM_GemmTN(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const std::size_t m = 64, n = 64;
  const auto a = random_values(k * m, 3), b = random_values(k * n, 4);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    std::fill(c.begin(), c.end(), 0.0);
    if constexpr (Parallel) kernels::gemm_tn(a, b, c, m, k, n);
    else kernels::serial::gemm_tn(a, b, c, m, k, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * k * n));
}

template <bool Parallel>
void BM_Spmm(benchmark::State& state) {
  SbmParams p;
  p.classes = 4;
  p.nodes_per_class = static_cast<int>(state.range(0)) / 4;
  p.p_in = 8.0 / p.nodes_per_class;
  p.p_out = 1.0 / (3.0 * p.nodes_per_class);
  p.feature_dim = 1;
  const Graph g = sbm_generate(p);
  const auto view = g.norm_adj.view();
  const std::size_t d = 64;
  const auto h = random_values(g.n * d, 5);
  std::vector<double> out(g.n * d);
  for (auto _ : state) {
    std::fill(out.begin(), out.end(), 0.0);
    if constexpr (Parallel) kernels::csr_spmm(view, h, out, d);
    else kernels::serial::csr_spmm(view, h, out, d);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * g.norm_adj.nnz() * d));
}

void BM_Predict(benchmark::State& state) {
  SbmParams p;
  p.classes = 7;
  p.nodes_per_class = 387;  // ~2700 nodes
  p.p_in = 0.01;
  p.p_out = 0.0005;
  p.feature_dim = 128;
  const Graph g = sbm_generate(p);
  ModelConfig cfg;
  const auto model = LgnsdeModel::init(g.d_in, 7, cfg, 1);
  const int previous = kernels::max_threads();
  kernels::set_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(predict(g, model, 4, 9).probs.data.data());
  kernels::set_threads(previous);
}

BENCHMARK(BM_GemmNN<false>)->Arg(512)->Arg(4096)->Name("GemmNN/serial");
BENCHMARK(BM_GemmNN<true>)->Arg(512)->Arg(4096)->Name("GemmNN/openmp");
BENCHMARK(BM_GemmTN<false>)->Arg(512)->Arg(4096)->Name("GemmTN/serial");
BENCHMARK(BM_GemmTN<true>)->Arg(512)->Arg(4096)->Name("GemmTN/openmp");
BENCHMARK(BM_Spmm<false>)->Arg(1024)->Arg(8192)->Name("Spmm/serial");
BENCHMARK(BM_Spmm<true>)->Arg(1024)->Arg(8192)->Name("Spmm/openmp");
BENCHMARK(BM_Predict)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->Name("Predict/threads");

}  // namespace

BENCHMARK_MAIN();
