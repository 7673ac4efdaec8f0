#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "dermseg/autodiff.hpp"
#include "dermseg/colorspace.hpp"
#include "dermseg/geometry.hpp"
#include "dermseg/image.hpp"
#include "dermseg/params.hpp"

namespace dermseg {

struct UNetConfig {
    int depth = 4;
    int base_features = 16;
    int in_channels = 3;  // 3 for RAW_1A, 5 for ENHANCED_1B
    int classes = 2;
    int kernel = 3;
    double dropout_p = 0.5;
    int content_size = 250;  // rescaled content edge the output must cover
    uint64_t seed = 0;
};

int mode_channels(InputMode mode);

// Contraction blocks double the feature channels, the expansion path halves
// them again via up-convolutions with center-crop skip concatenation, and a
// 1x1 head maps to the two classes. Weights are He-initialized, truncated at
// two standard deviations; biases start at zero.
ParamStore build_model(const UNetConfig& cfg);

// Appends the network to the graph and returns the logits node (2,H',W').
// Dropout sits after the deepest contraction block and after the bottleneck,
// and is active only in train mode.
Graph::NodeId unet_forward(Graph& g, ParamStore& params, const UNetConfig& cfg, Tensor input,
                           bool train_mode, uint64_t dropout_seed);
Graph::NodeId unet_forward(Graph& g, ParamStore& params, const UNetConfig& cfg,
                           Graph::NodeId input, bool train_mode, uint64_t dropout_seed);

// {identity, horizontal flip, rotate 90, rotate 180}, image and mask moved
// through the same transform.
std::array<std::pair<RgbImage, BinaryMask>, 4> augment4(const RgbImage& img,
                                                        const BinaryMask& mask);

struct TrainConfig {
    int iterations = 10000;
    double lr = 0.0002;
    bool augment = true;
    int checkpoint_every = 0;                // 0 disables periodic checkpoints
    std::filesystem::path checkpoint_path;   // empty disables all writing
    uint64_t seed = 0;
};

struct TrainResult {
    std::vector<double> loss_trace;  // one value per iteration
};

// Yields the (image, mask) pair for a dataset index; called per draw so the
// caller decides what to cache.
using SampleProvider = std::function<std::pair<RgbImage, BinaryMask>(int)>;

// One augmented sample per iteration (seeded shuffle, reshuffled each
// epoch), batch size 1, Adam. A non-finite loss saves a diagnostic
// checkpoint and raises NumericError.
TrainResult train(ParamStore& params, const UNetConfig& cfg, InputMode mode,
                  const SampleProvider& provider, int sample_count, const TrainConfig& tc);

// Eval-mode forward; lesion-class softmax resampled back to the original
// resolution.
Plane predict_prob(ParamStore& params, const UNetConfig& cfg, InputMode mode,
                   const RgbImage& img);

struct CheckpointMeta {
    UNetConfig config;
    InputMode mode = InputMode::kRaw1A;
    int iterations_done = 0;
    double final_loss = 0.0;
};

// ParamStore binary plus "<path>.manifest" sidecar with the config keys,
// iteration count and loss.
void save_checkpoint(const ParamStore& params, const CheckpointMeta& meta,
                     const std::filesystem::path& path);
std::pair<ParamStore, CheckpointMeta> load_checkpoint(const std::filesystem::path& path);

}  // namespace dermseg
