#include "dermseg/colorspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dermseg {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
constexpr double kThird = 2.0943951023931954923084;  // 2*pi/3
}  // namespace

HsiImage rgb_to_hsi(const RgbImage& img) {
    HsiImage out(img.width, img.height);
    for (size_t px = 0; px < img.pixel_count(); ++px) {
        double r = img.data[px * 3], g = img.data[px * 3 + 1], b = img.data[px * 3 + 2];
        double i = (r + g + b) / 3.0;
        double s = 0.0;
        if (i > 0.0) s = 1.0 - std::min({r, g, b}) / i;
        double h = 0.0;
        if (s > 0.0) {
            double num = 0.5 * ((r - g) + (r - b));
            double den = std::sqrt((r - g) * (r - g) + (r - b) * (g - b));
            if (den > 0.0) {
                double theta = std::acos(std::clamp(num / den, -1.0, 1.0));
                if (b > g) theta = kTwoPi - theta;
                h = theta / kTwoPi;
                if (h >= 1.0) h = 0.0;
            }
        }
        out.data[px * 3] = h;
        out.data[px * 3 + 1] = s;
        out.data[px * 3 + 2] = i;
    }
    return out;
}

RgbImage hsi_to_rgb(const HsiImage& img) {
    RgbImage out(img.width, img.height);
    for (size_t px = 0; px < static_cast<size_t>(img.width) * img.height; ++px) {
        double h = img.data[px * 3], s = img.data[px * 3 + 1], i = img.data[px * 3 + 2];
        double angle = h * kTwoPi;
        double r, g, b;
        if (angle < kThird) {
            b = i * (1.0 - s);
            r = i * (1.0 + s * std::cos(angle) / std::cos(kThird / 2.0 - angle));
            g = 3.0 * i - (r + b);
        } else if (angle < 2.0 * kThird) {
            angle -= kThird;
            r = i * (1.0 - s);
            g = i * (1.0 + s * std::cos(angle) / std::cos(kThird / 2.0 - angle));
            b = 3.0 * i - (r + g);
        } else {
            angle -= 2.0 * kThird;
            g = i * (1.0 - s);
            b = i * (1.0 + s * std::cos(angle) / std::cos(kThird / 2.0 - angle));
            r = 3.0 * i - (g + b);
        }
        out.data[px * 3] = std::clamp(r, 0.0, 1.0);
        out.data[px * 3 + 1] = std::clamp(g, 0.0, 1.0);
        out.data[px * 3 + 2] = std::clamp(b, 0.0, 1.0);
    }
    return out;
}

Plane equalize_plane(const Plane& p, int bins) {
    if (bins < 1) throw std::invalid_argument("equalize_plane: bins must be >= 1");
    if (p.data.empty()) return p;
    auto bin_of = [bins](double v) {
        int b = static_cast<int>(v * bins);
        return std::clamp(b, 0, bins - 1);
    };
    std::vector<size_t> hist(bins, 0);
    for (double v : p.data) ++hist[bin_of(v)];
    std::vector<double> cdf(bins, 0.0);
    size_t running = 0;
    for (int b = 0; b < bins; ++b) {
        running += hist[b];
        cdf[b] = static_cast<double>(running) / static_cast<double>(p.data.size());
    }
    Plane out(p.width, p.height);
    for (size_t i = 0; i < p.data.size(); ++i) out.data[i] = cdf[bin_of(p.data[i])];
    return out;
}

Plane gaussian_plane(int w, int h, double fwhm) {
    if (w < 1 || h < 1) throw std::invalid_argument("gaussian_plane: dimensions must be >= 1");
    if (!(fwhm > 0.0)) throw std::invalid_argument("gaussian_plane: fwhm must be > 0");
    Plane out(w, h);
    double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    double scale = 4.0 * std::log(2.0) / (fwhm * fwhm);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            out.at(x, y) = std::exp(-scale * d2);
        }
    }
    return out;
}

RgbImage rescale_max_dim(const RgbImage& img, int target) {
    if (target < 1) throw std::invalid_argument("rescale_max_dim: target must be >= 1");
    int major = std::max(img.width, img.height);
    if (major == target) return img;
    int out_w, out_h;
    if (img.width >= img.height) {
        out_w = target;
        out_h = std::max(1, static_cast<int>(std::llround(
                                static_cast<double>(img.height) * target / img.width)));
    } else {
        out_h = target;
        out_w = std::max(1, static_cast<int>(std::llround(
                                static_cast<double>(img.width) * target / img.height)));
    }
    return resize_bilinear(img, out_w, out_h);
}

NetInput assemble_input(const RgbImage& img, InputMode mode, const GeometryPlan& plan,
                        double gaussian_fwhm) {
    if (std::max(img.width, img.height) != plan.content_size) {
        throw std::invalid_argument("assemble_input: image does not fit the plan's content size");
    }
    int size = plan.input_size;
    NetInput in;
    in.channels = mode == InputMode::kRaw1A ? 3 : 5;
    in.size = size;
    in.data.assign(static_cast<size_t>(in.channels) * size * size, 1.0);

    InputGeometry& geo = in.geometry;
    geo.orig_w = img.width;
    geo.orig_h = img.height;
    geo.scaled_w = img.width;
    geo.scaled_h = img.height;
    geo.input_size = size;
    geo.output_size = plan.output_size;
    geo.canvas_x = (size - img.width) / 2;
    geo.canvas_y = (size - img.height) / 2;
    geo.out_x = geo.canvas_x - plan.output_margin;
    geo.out_y = geo.canvas_y - plan.output_margin;

    RgbImage base = img;
    Plane intensity;
    if (mode == InputMode::kEnhanced1B) {
        HsiImage hsi = rgb_to_hsi(img);
        intensity = Plane(img.width, img.height);
        for (size_t px = 0; px < img.pixel_count(); ++px) intensity.data[px] = hsi.data[px * 3 + 2];
        Plane equalized = equalize_plane(intensity);
        for (size_t px = 0; px < img.pixel_count(); ++px) hsi.data[px * 3 + 2] = equalized.data[px];
        base = hsi_to_rgb(hsi);
    }

    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                in.at(c, geo.canvas_y + y, geo.canvas_x + x) = base.at(x, y, c);
            }
        }
    }

    if (mode == InputMode::kEnhanced1B) {
        // Channel 4: original intensity, per-image min-max; a constant maps to 0.
        auto [lo_it, hi_it] = std::minmax_element(intensity.data.begin(), intensity.data.end());
        double lo = *lo_it, range = *hi_it - *lo_it;
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                double v = range > 0.0 ? (intensity.at(x, y) - lo) / range : 0.0;
                in.at(3, geo.canvas_y + y, geo.canvas_x + x) = v;
            }
        }
        Plane prior = gaussian_plane(size, size, gaussian_fwhm);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) in.at(4, y, x) = prior.at(x, y);
        }
    }
    return in;
}

}  // namespace dermseg
