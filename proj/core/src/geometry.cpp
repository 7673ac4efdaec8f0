#include "dermseg/geometry.hpp"

#include <stdexcept>

namespace dermseg {

namespace {

constexpr int kInputCap = 4096;

// Runs the shape trace; returns false when any size goes non-positive or a
// pre-pool size is odd.
bool trace(int input, int depth, GeometryPlan* plan) {
    int s = input;
    if (plan) plan->down_sizes.clear();
    for (int level = 0; level < depth; ++level) {
        s -= 4;
        if (s < 2 || s % 2 != 0) return false;
        if (plan) plan->down_sizes.push_back(s);
        s /= 2;
    }
    s -= 4;
    if (s < 1) return false;
    if (plan) plan->bottleneck_size = s;
    if (plan) plan->up_sizes.clear();
    for (int level = 0; level < depth; ++level) {
        s = 2 * s - 4;
        if (s < 1) return false;
        if (plan) plan->up_sizes.push_back(s);
    }
    if (plan) plan->output_size = s;
    return true;
}

}  // namespace

int valid_output_size(int input_size, int depth) {
    GeometryPlan scratch;
    if (!trace(input_size, depth, &scratch)) return -1;
    return scratch.output_size;
}

GeometryPlan geometry_solve(int target_output, int depth) {
    if (target_output < 1) throw std::invalid_argument("geometry_solve: target_output must be >= 1");
    if (depth < 1) throw std::invalid_argument("geometry_solve: depth must be >= 1");

    for (int input = target_output; input <= kInputCap; ++input) {
        GeometryPlan plan;
        if (!trace(input, depth, &plan)) continue;
        if (plan.output_size < target_output) continue;
        plan.depth = depth;
        plan.input_size = input;
        plan.content_size = target_output;
        plan.output_margin = (input - plan.output_size) / 2;
        plan.content_offset = (input - target_output) / 2;
        plan.content_crop = plan.content_offset - plan.output_margin;
        return plan;
    }
    throw std::invalid_argument("geometry_solve: no feasible input size below 4096");
}

}  // namespace dermseg
