#include "dermseg/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dermseg {

size_t BinaryMask::count() const {
    return static_cast<size_t>(std::count(data.begin(), data.end(), uint8_t{1}));
}

Plane luminance_plane(const RgbImage& img) {
    Plane out(img.width, img.height);
    for (size_t i = 0; i < out.size(); ++i) {
        out.data[i] = luminance(img.data[i * 3], img.data[i * 3 + 1], img.data[i * 3 + 2]);
    }
    return out;
}

namespace {

struct SampleCoord {
    int lo;
    int hi;
    double frac;
};

// Half-pixel-center source coordinate for output index o, clamped to the raster.
SampleCoord bilinear_coord(int o, int out_dim, int in_dim) {
    double src = (o + 0.5) * static_cast<double>(in_dim) / out_dim - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_dim - 1));
    int lo = static_cast<int>(std::floor(src));
    int hi = std::min(lo + 1, in_dim - 1);
    return {lo, hi, src - lo};
}

}  // namespace

Plane resize_bilinear(const Plane& p, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize_bilinear: bad target size");
    if (out_w == p.width && out_h == p.height) return p;
    Plane out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        SampleCoord cy = bilinear_coord(y, out_h, p.height);
        for (int x = 0; x < out_w; ++x) {
            SampleCoord cx = bilinear_coord(x, out_w, p.width);
            double top = p.at(cx.lo, cy.lo) * (1 - cx.frac) + p.at(cx.hi, cy.lo) * cx.frac;
            double bot = p.at(cx.lo, cy.hi) * (1 - cx.frac) + p.at(cx.hi, cy.hi) * cx.frac;
            out.at(x, y) = top * (1 - cy.frac) + bot * cy.frac;
        }
    }
    return out;
}

RgbImage resize_bilinear(const RgbImage& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize_bilinear: bad target size");
    if (out_w == img.width && out_h == img.height) return img;
    RgbImage out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        SampleCoord cy = bilinear_coord(y, out_h, img.height);
        for (int x = 0; x < out_w; ++x) {
            SampleCoord cx = bilinear_coord(x, out_w, img.width);
            for (int c = 0; c < 3; ++c) {
                double top = img.at(cx.lo, cy.lo, c) * (1 - cx.frac) + img.at(cx.hi, cy.lo, c) * cx.frac;
                double bot = img.at(cx.lo, cy.hi, c) * (1 - cx.frac) + img.at(cx.hi, cy.hi, c) * cx.frac;
                out.at(x, y, c) = top * (1 - cy.frac) + bot * cy.frac;
            }
        }
    }
    return out;
}

BinaryMask resize_nearest(const BinaryMask& m, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize_nearest: bad target size");
    if (out_w == m.width && out_h == m.height) return m;
    BinaryMask out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        int sy = std::min(static_cast<int>((y + 0.5) * m.height / out_h), m.height - 1);
        for (int x = 0; x < out_w; ++x) {
            int sx = std::min(static_cast<int>((x + 0.5) * m.width / out_w), m.width - 1);
            out.set(x, y, m.get(sx, sy));
        }
    }
    return out;
}

}  // namespace dermseg
