// SPDX-License-Identifier: Apache-2.0
// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "gadgetforge/kernels.hpp"
#include "gadgetforge/rng.hpp"

namespace gk = gadgetforge::kernels;

namespace {

std::vector<double> random_buffer(std::size_t n, std::uint64_t seed) {
  gadgetforge::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto a = random_buffer(n * n, 1);
  auto b = random_buffer(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      gk::matmul_parallel(a, b, c, n, n, n);
    } else {
      gk::matmul_serial(a, b, c, n, n, n);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}

template <bool Parallel>
void BM_Sha256All(benchmark::State& state) {
  std::vector<std::string> texts;
  gadgetforge::Rng rng(3);
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    std::string s(400, ' ');
    for (auto& ch : s) ch = static_cast<char>('a' + rng.below(26));
    texts.push_back(std::move(s));
  }
  for (auto _ : state) {
    auto d = Parallel ? gk::sha256_all_parallel(texts) : gk::sha256_all_serial(texts);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_SumOrdered(benchmark::State& state) {
  std::vector<std::vector<double>> parts;
  for (std::uint64_t i = 0; i < 16; ++i) parts.push_back(random_buffer(static_cast<std::size_t>(state.range(0)), i));
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Parallel) {
      gk::sum_ordered_parallel(parts, out);
    } else {
      gk::sum_ordered_serial(parts, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_Matmul<false>)->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<true>)->Arg(64)->Arg(256);
BENCHMARK(BM_Sha256All<false>)->Arg(20000);
BENCHMARK(BM_Sha256All<true>)->Arg(20000);
BENCHMARK(BM_SumOrdered<false>)->Arg(1 << 16);
BENCHMARK(BM_SumOrdered<true>)->Arg(1 << 16);

BENCHMARK_MAIN();
