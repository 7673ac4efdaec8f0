#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dermseg/config.hpp"

namespace dermseg {

// Process exit codes shared by all commands.
constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitMissingModel = 3;
constexpr int kExitDiverged = 4;

struct SynthOptions {
    std::filesystem::path out_dir;
    int count = 20;
    uint64_t seed = 0;
    int hairs = 0;
    bool vignette = false;
    int canvas = 200;
    double noise_sigma = 0.01;
};

// Writes `count` image/mask pairs in the catalog layout plus a manifest.
int cmd_synth(const SynthOptions& opt);

struct SegmentOptions {
    std::string method;  // "cluster", "unet-a", "unet-b"
    std::filesystem::path input;  // an image file or a catalog directory
    std::filesystem::path out;    // mask file, or directory when input is one
    std::filesystem::path model;  // checkpoint, required for unet methods
    double threshold = 0.5;       // unet-b binarization threshold
    uint64_t seed = 0;
    int jobs = 1;
    Config config;
};

int cmd_segment(const SegmentOptions& opt);

struct TrainOptions {
    std::filesystem::path data_dir;
    std::string mode = "1b";  // "1a" or "1b"
    int iterations = -1;      // -1 means take train.iterations from config
    uint64_t seed = 0;
    std::filesystem::path out;  // checkpoint path
    Config config;
};

int cmd_train(const TrainOptions& opt);

struct EvalOptions {
    std::filesystem::path data_dir;
    std::vector<std::string> methods;  // any of "cluster", "unet-a", "unet-b"
    int folds = 5;
    double train_frac = 0.9;
    uint64_t seed = 0;
    std::filesystem::path out_dir;
    int jobs = 1;
    Config config;
};

int cmd_eval(const EvalOptions& opt);

}  // namespace dermseg
