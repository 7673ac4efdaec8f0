#pragma once

#include <utility>
#include <vector>

#include "dermseg/image.hpp"

namespace dermseg {

enum class SeShape { kDisk, kSquare };

// Disk membership is dx^2 + dy^2 <= r^2.
struct StructuringElement {
    SeShape shape = SeShape::kDisk;
    int radius = 1;

    std::vector<std::pair<int, int>> offsets() const;
};

enum class MorphOp { kErode, kDilate, kOpen, kClose };

// Grayscale morphology with edge replication at the borders.
Plane morph(MorphOp op, const Plane& p, const StructuringElement& se);

// close(p) - p; non-negative, responds to dark structures thinner than se.
Plane black_tophat(const Plane& p, const StructuringElement& se);

struct HairRemovalResult {
    RgbImage cleaned;
    BinaryMask hair_mask;
};

// Top-hat on luminance, threshold, dilate by 1; hair pixels take the
// per-channel median of nearby non-hair pixels (window grown from 5x5 until
// it holds at least 5). Throws when the mask covers more than 80% of the
// image.
HairRemovalResult remove_hair(const RgbImage& img, int se_radius = 7, double thresh = 0.04);

// 4-connected components of (luminance < lum_thresh) that touch the image
// border; interior dark regions are left alone.
BinaryMask dark_border_mask(const RgbImage& img, double lum_thresh = 0.1);

// Background unreachable from the border (4-connectivity) becomes foreground.
BinaryMask fill_holes(const BinaryMask& m);

LabelMap connected_components(const BinaryMask& m);

// Keeps the maximal-area component, ties broken by smallest label. Empty in,
// empty out.
BinaryMask largest_component(const BinaryMask& m);

}  // namespace dermseg
