#include "dermseg/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dermseg/errors.hpp"

namespace dermseg {

std::vector<std::pair<int, int>> StructuringElement::offsets() const {
    if (radius < 1) throw std::invalid_argument("StructuringElement: radius must be >= 1");
    std::vector<std::pair<int, int>> out;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (shape == SeShape::kDisk && dx * dx + dy * dy > radius * radius) continue;
            out.emplace_back(dx, dy);
        }
    }
    return out;
}

namespace {

Plane window_extreme(const Plane& p, const StructuringElement& se, bool take_max) {
    auto offsets = se.offsets();
    Plane out(p.width, p.height);
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            double best = take_max ? -1e300 : 1e300;
            for (auto [dx, dy] : offsets) {
                int sx = std::clamp(x + dx, 0, p.width - 1);   // edge replication
                int sy = std::clamp(y + dy, 0, p.height - 1);
                double v = p.at(sx, sy);
                best = take_max ? std::max(best, v) : std::min(best, v);
            }
            out.at(x, y) = best;
        }
    }
    return out;
}

}  // namespace

Plane morph(MorphOp op, const Plane& p, const StructuringElement& se) {
    switch (op) {
        case MorphOp::kErode:
            return window_extreme(p, se, false);
        case MorphOp::kDilate:
            return window_extreme(p, se, true);
        case MorphOp::kOpen:
            return morph(MorphOp::kDilate, morph(MorphOp::kErode, p, se), se);
        case MorphOp::kClose:
            return morph(MorphOp::kErode, morph(MorphOp::kDilate, p, se), se);
    }
    throw std::invalid_argument("morph: unknown op");
}

Plane black_tophat(const Plane& p, const StructuringElement& se) {
    Plane closed = morph(MorphOp::kClose, p, se);
    Plane out(p.width, p.height);
    for (size_t i = 0; i < out.size(); ++i) {
        out.data[i] = std::max(0.0, closed.data[i] - p.data[i]);
    }
    return out;
}

HairRemovalResult remove_hair(const RgbImage& img, int se_radius, double thresh) {
    Plane lum = luminance_plane(img);
    Plane response = black_tophat(lum, {SeShape::kDisk, se_radius});

    BinaryMask raw(img.width, img.height);
    for (size_t i = 0; i < raw.data.size(); ++i) raw.data[i] = response.data[i] > thresh ? 1 : 0;

    // dilate the detection by a unit disk to cover anti-aliased stroke edges
    BinaryMask mask(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            bool hit = raw.get(x, y);
            if (!hit && x > 0) hit = raw.get(x - 1, y);
            if (!hit && x + 1 < img.width) hit = raw.get(x + 1, y);
            if (!hit && y > 0) hit = raw.get(x, y - 1);
            if (!hit && y + 1 < img.height) hit = raw.get(x, y + 1);
            mask.set(x, y, hit);
        }
    }

    size_t hair_pixels = mask.count();
    if (hair_pixels > 0.8 * mask.data.size()) {
        throw NumericError("remove_hair: hair mask covers more than 80% of the image");
    }

    HairRemovalResult result{img, std::move(mask)};
    if (hair_pixels == 0) return result;

    std::vector<double> vals;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (!result.hair_mask.get(x, y)) continue;
            // grow a square window until it holds enough clean pixels
            int half = 2;
            int found = 0;
            while (true) {
                found = 0;
                for (int sy = std::max(0, y - half); sy <= std::min(img.height - 1, y + half); ++sy) {
                    for (int sx = std::max(0, x - half); sx <= std::min(img.width - 1, x + half); ++sx) {
                        if (!result.hair_mask.get(sx, sy)) ++found;
                    }
                }
                if (found >= 5 || half > std::max(img.width, img.height)) break;
                ++half;
            }
            if (found == 0) continue;  // pathological: nothing to inpaint from
            for (int c = 0; c < 3; ++c) {
                vals.clear();
                for (int sy = std::max(0, y - half); sy <= std::min(img.height - 1, y + half); ++sy) {
                    for (int sx = std::max(0, x - half); sx <= std::min(img.width - 1, x + half); ++sx) {
                        if (!result.hair_mask.get(sx, sy)) vals.push_back(img.at(sx, sy, c));
                    }
                }
                size_t mid = vals.size() / 2;
                std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
                result.cleaned.at(x, y, c) = vals[mid];
            }
        }
    }
    return result;
}

namespace {

// Iterative 4-connected flood fill over an arbitrary predicate.
template <typename Pred>
void flood4(int width, int height, int sx, int sy, std::vector<int>& labels, int label,
            Pred&& inside) {
    std::vector<std::pair<int, int>> stack{{sx, sy}};
    labels[static_cast<size_t>(sy) * width + sx] = label;
    while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        const int nx[4] = {x - 1, x + 1, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int i = 0; i < 4; ++i) {
            if (nx[i] < 0 || nx[i] >= width || ny[i] < 0 || ny[i] >= height) continue;
            size_t idx = static_cast<size_t>(ny[i]) * width + nx[i];
            if (labels[idx] == 0 && inside(nx[i], ny[i])) {
                labels[idx] = label;
                stack.emplace_back(nx[i], ny[i]);
            }
        }
    }
}

}  // namespace

BinaryMask dark_border_mask(const RgbImage& img, double lum_thresh) {
    Plane lum = luminance_plane(img);
    auto dark = [&](int x, int y) { return lum.at(x, y) < lum_thresh; };

    std::vector<int> labels(lum.size(), 0);
    for (int x = 0; x < img.width; ++x) {
        for (int y : {0, img.height - 1}) {
            if (dark(x, y) && labels[static_cast<size_t>(y) * img.width + x] == 0) {
                flood4(img.width, img.height, x, y, labels, 1, dark);
            }
        }
    }
    for (int y = 0; y < img.height; ++y) {
        for (int x : {0, img.width - 1}) {
            if (dark(x, y) && labels[static_cast<size_t>(y) * img.width + x] == 0) {
                flood4(img.width, img.height, x, y, labels, 1, dark);
            }
        }
    }
    BinaryMask out(img.width, img.height);
    for (size_t i = 0; i < labels.size(); ++i) out.data[i] = labels[i] ? 1 : 0;
    return out;
}

BinaryMask fill_holes(const BinaryMask& m) {
    auto background = [&](int x, int y) { return !m.get(x, y); };
    std::vector<int> reach(m.data.size(), 0);
    for (int x = 0; x < m.width; ++x) {
        for (int y : {0, m.height - 1}) {
            if (background(x, y) && reach[static_cast<size_t>(y) * m.width + x] == 0) {
                flood4(m.width, m.height, x, y, reach, 1, background);
            }
        }
    }
    for (int y = 0; y < m.height; ++y) {
        for (int x : {0, m.width - 1}) {
            if (background(x, y) && reach[static_cast<size_t>(y) * m.width + x] == 0) {
                flood4(m.width, m.height, x, y, reach, 1, background);
            }
        }
    }
    BinaryMask out(m.width, m.height);
    for (size_t i = 0; i < m.data.size(); ++i) out.data[i] = (m.data[i] || !reach[i]) ? 1 : 0;
    return out;
}

LabelMap connected_components(const BinaryMask& m) {
    LabelMap lm;
    lm.width = m.width;
    lm.height = m.height;
    lm.labels.assign(m.data.size(), 0);
    auto inside = [&](int x, int y) { return m.get(x, y); };
    int next = 0;
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (m.get(x, y) && lm.labels[static_cast<size_t>(y) * m.width + x] == 0) {
                flood4(m.width, m.height, x, y, lm.labels, ++next, inside);
            }
        }
    }
    lm.component_count = next;
    return lm;
}

BinaryMask largest_component(const BinaryMask& m) {
    LabelMap lm = connected_components(m);
    if (lm.component_count == 0) return BinaryMask(m.width, m.height);
    std::vector<size_t> area(lm.component_count + 1, 0);
    for (int label : lm.labels) ++area[label];
    int best = 1;
    for (int label = 2; label <= lm.component_count; ++label) {
        if (area[label] > area[best]) best = label;  // tie keeps the smaller label
    }
    BinaryMask out(m.width, m.height);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = lm.labels[i] == best ? 1 : 0;
    return out;
}

}  // namespace dermseg
