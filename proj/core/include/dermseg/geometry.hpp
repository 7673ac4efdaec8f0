#pragma once

#include <vector>

namespace dermseg {

// Valid-convolution U-Net sizes for a square input. Each contraction level
// applies two 3x3 valid convolutions (-4) and a 2x2 pool (/2, needs even);
// the expansion path doubles (+upconv) and convolves back (-4).
struct GeometryPlan {
    int depth = 0;
    int input_size = 0;
    int output_size = 0;
    int content_size = 0;            // the target the output must cover
    std::vector<int> down_sizes;     // conv-block output per level (the skips)
    int bottleneck_size = 0;
    std::vector<int> up_sizes;       // conv-block output per level, deepest first
    int output_margin = 0;           // input canvas border consumed by the net
    int content_offset = 0;          // content window top-left on the input canvas
    int content_crop = 0;            // content window top-left in output coordinates
};

// Smallest feasible input whose sizes stay integral, every pre-pool size is
// even, and the output covers target_output. Throws when nothing fits below
// the hard cap of 4096.
GeometryPlan geometry_solve(int target_output, int depth);

// Output size for a given input under the same recurrence, or -1 when the
// input is infeasible (non-integral or odd pre-pool sizes).
int valid_output_size(int input_size, int depth);

}  // namespace dermseg
