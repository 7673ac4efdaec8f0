#pragma once

#include <vector>

#include "dermseg/geometry.hpp"
#include "dermseg/image.hpp"

namespace dermseg {

// Hue stored as angle/2pi in [0,1); h=0 whenever s=0.
struct HsiImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // interleaved h,s,i

    HsiImage() = default;
    HsiImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0.0) {}
    double& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
};

HsiImage rgb_to_hsi(const RgbImage& img);
RgbImage hsi_to_rgb(const HsiImage& img);

// v' = cdf(v) over `bins` equal-width bins on [0,1]; inclusive, so output
// lands in (0,1] and a constant plane maps to 1.
Plane equalize_plane(const Plane& p, int bins = 256);

// exp(-4 ln2 * r^2 / fwhm^2) around the canvas center ((w-1)/2, (h-1)/2).
Plane gaussian_plane(int w, int h, double fwhm = 125.0);

// Bilinear, aspect preserved, minor dimension rounded half up. Upscales too.
RgbImage rescale_max_dim(const RgbImage& img, int target = 250);

enum class InputMode { kRaw1A, kEnhanced1B };

// Where each network pixel came from; enough to map outputs back to the
// original raster.
struct InputGeometry {
    int orig_w = 0, orig_h = 0;      // before rescaling
    int scaled_w = 0, scaled_h = 0;  // after rescale_max_dim
    int input_size = 0;              // square network canvas
    int output_size = 0;
    int canvas_x = 0, canvas_y = 0;  // scaled image top-left on the canvas
    int out_x = 0, out_y = 0;        // scaled image top-left in output coordinates
};

// Planar C x H x W network input. RAW_1A: 3 channels of the rescaled RGB.
// ENHANCED_1B: equalized-RGB, normalized original intensity, Gaussian prior.
struct NetInput {
    int channels = 0;
    int size = 0;  // H = W
    std::vector<double> data;
    InputGeometry geometry;

    double& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * size + y) * size + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * size + y) * size + x];
    }
};

// `img` must already be rescaled so max(w,h) == plan.content_size. Channels
// 1-4 pad with white (1.0); the Gaussian channel is evaluated analytically
// over the whole canvas.
NetInput assemble_input(const RgbImage& img, InputMode mode, const GeometryPlan& plan,
                        double gaussian_fwhm = 125.0);

}  // namespace dermseg
