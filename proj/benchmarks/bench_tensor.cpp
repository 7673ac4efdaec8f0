#include <benchmark/benchmark.h>

#include "dermseg/autodiff.hpp"
#include "dermseg/rng.hpp"

using namespace dermseg;

namespace {

Tensor random_tensor(const std::vector<int>& shape, uint64_t seed) {
    Rng rng(seed);
    Tensor t(shape);
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

}  // namespace

static void BM_Conv2dForward(benchmark::State& state) {
    int c = static_cast<int>(state.range(0));
    int hw = static_cast<int>(state.range(1));
    Tensor in = random_tensor({c, hw, hw}, 1);
    Tensor w = random_tensor({c, c, 3, 3}, 2);
    Tensor b = random_tensor({c}, 3);
    for (auto _ : state) {
        Graph g;
        auto out = g.conv2d_valid(g.input(in), g.input(w), g.input(b));
        benchmark::DoNotOptimize(g.value(out).data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(c) * c * 9 * (hw - 2) *
                            (hw - 2));
}
BENCHMARK(BM_Conv2dForward)->Args({4, 128})->Args({8, 128})->Args({16, 64});

static void BM_Conv2dTrainStep(benchmark::State& state) {
    int c = static_cast<int>(state.range(0));
    int hw = static_cast<int>(state.range(1));
    Tensor in = random_tensor({c, hw, hw}, 1);
    Tensor w = random_tensor({c, c, 3, 3}, 2);
    Tensor b = random_tensor({c}, 3);
    for (auto _ : state) {
        Graph g;
        auto wid = g.input(w, true);
        auto loss = g.sum(g.relu(g.conv2d_valid(g.input(in), wid, g.input(b))));
        g.backward(loss);
        benchmark::DoNotOptimize(g.grad(wid).data.data());
    }
}
BENCHMARK(BM_Conv2dTrainStep)->Args({4, 128})->Args({8, 64});

static void BM_Maxpool(benchmark::State& state) {
    Tensor in = random_tensor({8, 128, 128}, 4);
    for (auto _ : state) {
        Graph g;
        auto out = g.maxpool2(g.input(in));
        benchmark::DoNotOptimize(g.value(out).data.data());
    }
}
BENCHMARK(BM_Maxpool);

static void BM_Upconv(benchmark::State& state) {
    Tensor in = random_tensor({8, 64, 64}, 5);
    Tensor w = random_tensor({8, 4, 2, 2}, 6);
    Tensor b = random_tensor({4}, 7);
    for (auto _ : state) {
        Graph g;
        auto out = g.upconv2(g.input(in), g.input(w), g.input(b));
        benchmark::DoNotOptimize(g.value(out).data.data());
    }
}
BENCHMARK(BM_Upconv);

BENCHMARK_MAIN();
