#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dermseg {

// Dense row-major tensor of doubles. Every op output is checked finite;
// NaN/Inf raises NumericError.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, double fill = 0.0);

    static Tensor scalar(double v);

    size_t numel() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[i]; }

    // rank-3 accessor (C,H,W)
    double& at3(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    double at3(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    // rank-4 accessor (A,B,H,W)
    double& at4(int a, int b, int y, int x) {
        return data[((static_cast<size_t>(a) * shape[1] + b) * static_cast<size_t>(shape[2]) + y) *
                        shape[3] +
                    x];
    }
    double at4(int a, int b, int y, int x) const {
        return data[((static_cast<size_t>(a) * shape[1] + b) * static_cast<size_t>(shape[2]) + y) *
                        shape[3] +
                    x];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    std::string shape_str() const;
};

void ensure_finite(const Tensor& t, const char* op_name);

}  // namespace dermseg
