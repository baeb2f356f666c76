// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "tvc/bitmask_ops.hpp"
#include "tvc/codec.hpp"
#include "tvc/compress.hpp"

using namespace tvc;

namespace {

TernaryTensor random_ternary(std::uint64_t dim, double density, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution keep(density), coin(0.5);
    TernaryTensor t{"t", dim, {}, {}, 0.75f, {dim}};
    for (std::uint64_t i = 0; i < dim; ++i) {
        if (keep(rng)) {
            t.indices.push_back(i);
            t.signs.push_back(coin(rng) ? 1 : -1);
        }
    }
    return t;
}

void BM_BitmaskDot(benchmark::State & state) {
    const auto dim = static_cast<std::uint64_t>(state.range(0));
    const auto a   = BitmaskPair::from_tensor(random_ternary(dim, 0.05, 1));
    const auto b   = BitmaskPair::from_tensor(random_ternary(dim, 0.05, 2));
    for (auto _ : state) benchmark::DoNotOptimize(dot(a, b));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * dim));
}
BENCHMARK(BM_BitmaskDot)->Arg(1 << 24);

void BM_DenseDot(benchmark::State & state) {
    const auto dim = static_cast<std::uint64_t>(state.range(0));
    const auto a   = reconstruct_dense(random_ternary(dim, 0.05, 1));
    const auto b   = reconstruct_dense(random_ternary(dim, 0.05, 2));
    for (auto _ : state) {
        float acc = 0.0f;
        for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * dim));
}
BENCHMARK(BM_DenseDot)->Arg(1 << 24);

void BM_GolombEncode(benchmark::State & state) {
    const auto t = random_ternary(1 << 22, state.range(0) / 100.0, 3);
    for (auto _ : state) benchmark::DoNotOptimize(encode_golomb(t));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * t.nonzeros()));
}
BENCHMARK(BM_GolombEncode)->Arg(1)->Arg(5)->Arg(20);

void BM_GolombDecode(benchmark::State & state) {
    const auto t    = random_ternary(1 << 22, state.range(0) / 100.0, 4);
    const auto blob = encode_golomb(t);
    for (auto _ : state) benchmark::DoNotOptimize(decode(blob));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * t.nonzeros()));
}
BENCHMARK(BM_GolombDecode)->Arg(1)->Arg(5)->Arg(20);

void BM_TopkSupport(benchmark::State & state) {
    std::mt19937_64 rng(5);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::vector<float> mags(static_cast<std::size_t>(state.range(0)));
    for (auto & m : mags) m = std::fabs(dist(rng));
    for (auto _ : state) benchmark::DoNotOptimize(topk_support(mags, 5.0));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * mags.size()));
}
BENCHMARK(BM_TopkSupport)->Arg(1 << 20)->Arg(1 << 24);

} // namespace

BENCHMARK_MAIN();
