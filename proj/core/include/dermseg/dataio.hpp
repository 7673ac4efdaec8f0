#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dermseg/image.hpp"

namespace dermseg {

struct CatalogSample {
    std::string id;
    std::filesystem::path image_path;
    std::optional<std::filesystem::path> mask_path;
};

// Image/mask pairs discovered on disk, ordered lexicographically by id.
struct DatasetCatalog {
    std::vector<CatalogSample> samples;
};

// Layout: <root>/images/*.jpg|jpeg|png with <root>/masks/<id>_segmentation.png,
// or the same files side by side in <root> itself. Unpaired masks produce a
// warning on stderr, never an error.
DatasetCatalog scan_catalog(const std::filesystem::path& root);

struct Fold {
    std::vector<int> train_indices;
    std::vector<int> validation_indices;
};

// k independent random resplits of [0, n), not a disjoint partition.
struct FoldPlan {
    uint64_t seed = 0;
    std::vector<Fold> folds;
};

FoldPlan make_folds(int n, int k, double train_frac, uint64_t seed);

// Flat text format: "seed=<int>" then one comma-separated line of validation
// ids per fold.
void save_fold_plan(const FoldPlan& plan, const std::vector<std::string>& ids,
                    const std::filesystem::path& path);

// Synthetic lesion: dark ellipse on light skin, optional noise, hair strokes
// and corner vignette. The truth mask is the rasterized ellipse, which makes
// every generated image a segmentation oracle.
struct SynthSpec {
    int canvas = 200;
    double center_x = 100.0;
    double center_y = 100.0;
    double axis_a = 45.0;
    double axis_b = 30.0;
    double rotation = 0.0;  // radians
    double lesion_color[3] = {0.32, 0.18, 0.14};
    double skin_color[3] = {0.85, 0.68, 0.60};
    double noise_sigma = 0.0;
    int hair_count = 0;
    int hair_width = 1;
    bool vignette = false;
    uint64_t seed = 0;
};

struct SynthResult {
    RgbImage image;
    BinaryMask mask;        // truth: rasterized ellipse
    BinaryMask hair_mask;   // pixels painted by hair strokes
};

SynthResult synth_lesion(const SynthSpec& spec);

// Randomized but seed-replayable spec: ellipse geometry and colors drawn
// from ranges that keep the lesion inside the canvas and darker than skin.
SynthSpec random_lesion_spec(int canvas, int hairs, bool vignette, double noise_sigma,
                             uint64_t seed);

// Decodes baseline JPEG or PNG by magic bytes; 8-bit channels map to v/255.
RgbImage load_image(const std::filesystem::path& path);

// Loaded masks threshold gray at 128 to absorb anti-aliased edges.
BinaryMask load_mask(const std::filesystem::path& path);

// Single-channel 8-bit PNG, lesion=255, background=0.
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);

void save_image_png(const RgbImage& img, const std::filesystem::path& path);
void save_image_jpeg(const RgbImage& img, const std::filesystem::path& path, int quality = 95);

}  // namespace dermseg
