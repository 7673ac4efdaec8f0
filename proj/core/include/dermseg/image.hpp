#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dermseg {

// RGB raster with unit-interval channels, interleaved r,g,b.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    RgbImage() = default;
    RgbImage(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<size_t>(w) * h * 3, fill) {
        if (w < 1 || h < 1) throw std::invalid_argument("RgbImage: dimensions must be >= 1");
    }

    double& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

// Single-channel raster of reals.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Plane() = default;
    Plane(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return data.size(); }
};

// Boolean lesion mask, 1 = lesion.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill ? 1 : 0) {}

    bool get(int x, int y) const { return data[static_cast<size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { data[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
    size_t count() const;
    bool operator==(const BinaryMask& o) const {
        return width == o.width && height == o.height && data == o.data;
    }
};

// 4-connected component labels, 0 = background, components numbered from 1.
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<int> labels;
    int component_count = 0;

    int at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
};

// Rec.601 scalar luminance proxy, used wherever "dark" needs a number.
inline double luminance(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

Plane luminance_plane(const RgbImage& img);

// Bilinear resample with half-pixel centers; preserves constant rasters.
Plane resize_bilinear(const Plane& p, int out_w, int out_h);
RgbImage resize_bilinear(const RgbImage& img, int out_w, int out_h);

// Nearest-neighbor resample for masks.
BinaryMask resize_nearest(const BinaryMask& m, int out_w, int out_h);

}  // namespace dermseg
