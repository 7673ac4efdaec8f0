#include <benchmark/benchmark.h>

#include "dermseg/colorspace.hpp"
#include "dermseg/dataio.hpp"
#include "dermseg/fuzzyclust.hpp"
#include "dermseg/morphology.hpp"

using namespace dermseg;

namespace {

const SynthResult& sample() {
    static SynthResult s = synth_lesion(random_lesion_spec(250, 5, false, 0.01, 123));
    return s;
}

}  // namespace

static void BM_ClusterSegment(benchmark::State& state) {
    ClusterConfig cc;
    cc.seed = 9;
    for (auto _ : state) {
        BinaryMask mask = cluster_segment(sample().image, cc);
        benchmark::DoNotOptimize(mask.data.data());
    }
}
BENCHMARK(BM_ClusterSegment)->Unit(benchmark::kMillisecond);

static void BM_FcmFit(benchmark::State& state) {
    const RgbImage& img = sample().image;
    FeatureMatrix features;
    features.d = 3;
    features.n = static_cast<int>(img.pixel_count());
    features.rows = img.data;
    for (int i = 0; i < features.n; ++i) features.index_map.emplace_back(i % img.width, i / img.width);
    for (auto _ : state) {
        FcmResult r = fcm_fit(features, 5, 2.0, 1e-4, 20, 1);
        benchmark::DoNotOptimize(r.centroids.v.data());
    }
    state.SetItemsProcessed(state.iterations() * features.n);
}
BENCHMARK(BM_FcmFit)->Unit(benchmark::kMillisecond);

static void BM_RemoveHair(benchmark::State& state) {
    for (auto _ : state) {
        HairRemovalResult r = remove_hair(sample().image);
        benchmark::DoNotOptimize(r.cleaned.data.data());
    }
}
BENCHMARK(BM_RemoveHair)->Unit(benchmark::kMillisecond);

static void BM_HsiRoundTrip(benchmark::State& state) {
    for (auto _ : state) {
        RgbImage back = hsi_to_rgb(rgb_to_hsi(sample().image));
        benchmark::DoNotOptimize(back.data.data());
    }
}
BENCHMARK(BM_HsiRoundTrip)->Unit(benchmark::kMillisecond);

static void BM_EqualizeIntensity(benchmark::State& state) {
    Plane lum = luminance_plane(sample().image);
    for (auto _ : state) {
        Plane eq = equalize_plane(lum);
        benchmark::DoNotOptimize(eq.data.data());
    }
}
BENCHMARK(BM_EqualizeIntensity)->Unit(benchmark::kMillisecond);
