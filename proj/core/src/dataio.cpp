#include "dermseg/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "dermseg/errors.hpp"
#include "dermseg/rng.hpp"

namespace dermseg {

namespace fs = std::filesystem;

namespace {

const std::string kMaskSuffix = "_segmentation";

std::string lower_ext(const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e;
}

bool is_image_file(const fs::path& p) {
    std::string e = lower_ext(p);
    return e == ".jpg" || e == ".jpeg" || e == ".png";
}

bool is_mask_file(const fs::path& p) {
    std::string stem = p.stem().string();
    return lower_ext(p) == ".png" && stem.size() > kMaskSuffix.size() &&
           stem.compare(stem.size() - kMaskSuffix.size(), kMaskSuffix.size(), kMaskSuffix) == 0;
}

}  // namespace

DatasetCatalog scan_catalog(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec) || ec) {
        throw IoError("catalog root is not a readable directory: " + root.string());
    }
    fs::path image_dir = fs::is_directory(root / "images") ? root / "images" : root;
    fs::path mask_dir = fs::is_directory(root / "masks") ? root / "masks" : root;

    std::map<std::string, CatalogSample> by_id;
    for (const auto& entry : fs::directory_iterator(image_dir, ec)) {
        if (!entry.is_regular_file()) continue;
        const fs::path& p = entry.path();
        if (!is_image_file(p) || is_mask_file(p)) continue;
        std::string id = p.stem().string();
        by_id[id] = CatalogSample{id, p, std::nullopt};
    }
    if (ec) throw IoError("cannot enumerate " + image_dir.string());

    for (const auto& entry : fs::directory_iterator(mask_dir, ec)) {
        if (!entry.is_regular_file()) continue;
        const fs::path& p = entry.path();
        if (!is_mask_file(p)) continue;
        std::string stem = p.stem().string();
        std::string id = stem.substr(0, stem.size() - kMaskSuffix.size());
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            std::cerr << "warning: mask without matching image: " << p.string() << "\n";
        } else {
            it->second.mask_path = p;
        }
    }

    DatasetCatalog catalog;
    catalog.samples.reserve(by_id.size());
    for (auto& [id, sample] : by_id) catalog.samples.push_back(std::move(sample));
    return catalog;
}

FoldPlan make_folds(int n, int k, double train_frac, uint64_t seed) {
    if (n < 1 || k < 1 || n < k) throw std::invalid_argument("make_folds: need n >= k >= 1");
    if (!(train_frac > 0.0 && train_frac < 1.0)) {
        throw std::invalid_argument("make_folds: train_frac must be in (0,1)");
    }
    int n_val = static_cast<int>(std::llround((1.0 - train_frac) * n));
    if (n_val < 1) throw std::invalid_argument("make_folds: validation split is empty");

    FoldPlan plan;
    plan.seed = seed;
    Rng rng(seed);
    for (int f = 0; f < k; ++f) {
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        Fold fold;
        fold.validation_indices.assign(order.begin(), order.begin() + n_val);
        fold.train_indices.assign(order.begin() + n_val, order.end());
        std::sort(fold.validation_indices.begin(), fold.validation_indices.end());
        std::sort(fold.train_indices.begin(), fold.train_indices.end());
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

void save_fold_plan(const FoldPlan& plan, const std::vector<std::string>& ids,
                    const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write fold plan: " + path.string());
    out << "seed=" << plan.seed << "\n";
    for (const Fold& fold : plan.folds) {
        for (size_t i = 0; i < fold.validation_indices.size(); ++i) {
            int idx = fold.validation_indices[i];
            if (idx < 0 || static_cast<size_t>(idx) >= ids.size()) {
                throw std::invalid_argument("save_fold_plan: index out of range");
            }
            out << (i ? "," : "") << ids[idx];
        }
        out << "\n";
    }
}

namespace {

void stamp_disk(RgbImage& img, BinaryMask& painted, double px, double py, double radius,
                const double color[3]) {
    int x0 = std::max(0, static_cast<int>(std::floor(px - radius)));
    int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(px + radius)));
    int y0 = std::max(0, static_cast<int>(std::floor(py - radius)));
    int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(py + radius)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double dx = x - px, dy = y - py;
            if (dx * dx + dy * dy <= radius * radius) {
                for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
                painted.set(x, y, true);
            }
        }
    }
}

}  // namespace

SynthResult synth_lesion(const SynthSpec& spec) {
    if (spec.canvas < 4) throw std::invalid_argument("synth_lesion: canvas too small");
    double ct = std::cos(spec.rotation), st = std::sin(spec.rotation);
    double ex = std::sqrt(spec.axis_a * ct * spec.axis_a * ct + spec.axis_b * st * spec.axis_b * st);
    double ey = std::sqrt(spec.axis_a * st * spec.axis_a * st + spec.axis_b * ct * spec.axis_b * ct);
    if (spec.center_x - ex < 0 || spec.center_x + ex > spec.canvas - 1 ||
        spec.center_y - ey < 0 || spec.center_y + ey > spec.canvas - 1) {
        throw std::invalid_argument("synth_lesion: ellipse exceeds canvas");
    }

    int n = spec.canvas;
    SynthResult out;
    out.image = RgbImage(n, n);
    out.mask = BinaryMask(n, n);
    out.hair_mask = BinaryMask(n, n);

    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            double dx = x - spec.center_x, dy = y - spec.center_y;
            double u = (dx * ct + dy * st) / spec.axis_a;
            double v = (-dx * st + dy * ct) / spec.axis_b;
            bool lesion = u * u + v * v <= 1.0;
            out.mask.set(x, y, lesion);
            const double* col = lesion ? spec.lesion_color : spec.skin_color;
            for (int c = 0; c < 3; ++c) out.image.at(x, y, c) = col[c];
        }
    }

    // Hair strokes draw from their own stream so noise settings cannot shift them.
    Rng hair_rng(Rng::mix(spec.seed, 1));
    for (int s = 0; s < spec.hair_count; ++s) {
        double p0x = hair_rng.uniform(0, n - 1), p0y = hair_rng.uniform(0, n - 1);
        double p1x = hair_rng.uniform(0, n - 1), p1y = hair_rng.uniform(0, n - 1);
        double cxp = hair_rng.uniform(0, n - 1), cyp = hair_rng.uniform(0, n - 1);
        double gray = hair_rng.uniform(0.04, 0.15);
        double color[3] = {gray, gray * 0.9, gray * 0.85};
        double radius = std::max(0.5, spec.hair_width / 2.0);
        int steps = 3 * n;
        for (int t = 0; t <= steps; ++t) {
            double u = static_cast<double>(t) / steps;
            double w0 = (1 - u) * (1 - u), w1 = 2 * u * (1 - u), w2 = u * u;
            double px = w0 * p0x + w1 * cxp + w2 * p1x;
            double py = w0 * p0y + w1 * cyp + w2 * p1y;
            stamp_disk(out.image, out.hair_mask, px, py, radius, color);
        }
    }

    if (spec.vignette) {
        double cx = (n - 1) / 2.0, cy = (n - 1) / 2.0;
        double corner = std::hypot(cx, cy);
        double inscribed = std::min(n, n) / 2.0;
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                double d = std::hypot(x - cx, y - cy);
                double f = std::clamp((corner - d) / (corner - inscribed), 0.0, 1.0);
                for (int c = 0; c < 3; ++c) out.image.at(x, y, c) *= f;
            }
        }
    }

    if (spec.noise_sigma > 0.0) {
        Rng noise_rng(Rng::mix(spec.seed, 2));
        for (double& v : out.image.data) {
            v = std::clamp(v + noise_rng.normal(0.0, spec.noise_sigma), 0.0, 1.0);
        }
    }
    return out;
}

SynthSpec random_lesion_spec(int canvas, int hairs, bool vignette, double noise_sigma,
                             uint64_t seed) {
    Rng rng(Rng::mix(seed, 3));
    SynthSpec spec;
    spec.canvas = canvas;
    spec.center_x = canvas * rng.uniform(0.42, 0.58);
    spec.center_y = canvas * rng.uniform(0.42, 0.58);
    spec.axis_a = canvas * rng.uniform(0.18, 0.30);
    spec.axis_b = spec.axis_a * rng.uniform(0.55, 0.95);
    spec.rotation = rng.uniform(0.0, 3.14159265358979);
    spec.lesion_color[0] = rng.uniform(0.25, 0.42);
    spec.lesion_color[1] = rng.uniform(0.12, 0.28);
    spec.lesion_color[2] = rng.uniform(0.08, 0.22);
    spec.skin_color[0] = rng.uniform(0.78, 0.90);
    spec.skin_color[1] = rng.uniform(0.58, 0.72);
    spec.skin_color[2] = rng.uniform(0.50, 0.66);
    spec.noise_sigma = noise_sigma;
    spec.hair_count = hairs;
    spec.hair_width = 2;
    spec.vignette = vignette;
    spec.seed = seed;
    return spec;
}

}  // namespace dermseg
