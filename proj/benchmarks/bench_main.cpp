#include <benchmark/benchmark.h>

#include "gpe/masking.hpp"
#include "gpe/metrics.hpp"
#include "gpe/numeric.hpp"
#include "gpe/rng.hpp"

namespace {

void BM_matmul(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    gpe::RngState rng{1};
    gpe::Matrix a = gpe::random_normal(rng, n, n, 1.0);
    gpe::Matrix b = gpe::random_normal(rng, n, n, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(gpe::matmul(a, b));
}
BENCHMARK(BM_matmul)->Arg(16)->Arg(32)->Arg(64);

void BM_masked_attention(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    gpe::RngState rng{2};
    gpe::Matrix q = gpe::random_normal(rng, n, 32, 1.0);
    gpe::Matrix k = gpe::random_normal(rng, n, 32, 1.0);
    gpe::Matrix v = gpe::random_normal(rng, n, 32, 1.0);
    gpe::SequenceLayout lay{n - 25, 9, 6};
    gpe::Matrix mask = gpe::build_vision_mask(lay).entries;
    for (auto _ : state)
        benchmark::DoNotOptimize(gpe::masked_attention(q, k, v, mask, 0.176776695));
}
BENCHMARK(BM_masked_attention)->Arg(33)->Arg(57);

void BM_build_mask(benchmark::State& state) {
    gpe::SequenceLayout lay{static_cast<std::size_t>(state.range(0)), 9, 6};
    for (auto _ : state) benchmark::DoNotOptimize(gpe::build_vision_mask(lay));
}
BENCHMARK(BM_build_mask)->Arg(8)->Arg(64);

void BM_vendi_score(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    gpe::RngState rng{3};
    gpe::Matrix e = gpe::random_normal(rng, n, 16, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(gpe::vendi_score(e));
}
BENCHMARK(BM_vendi_score)->Arg(18)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
