#include "dermseg/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dermseg/errors.hpp"

namespace dermseg {

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)) {
    size_t n = 1;
    for (int d : shape) {
        if (d < 1) throw std::invalid_argument("Tensor: dimensions must be >= 1");
        n *= static_cast<size_t>(d);
    }
    data.assign(n, fill);
}

Tensor Tensor::scalar(double v) {
    Tensor t(std::vector<int>{1});
    t.data[0] = v;
    return t;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ")";
    return os.str();
}

void ensure_finite(const Tensor& t, const char* op_name) {
    for (double v : t.data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(op_name) + ": non-finite value in output");
        }
    }
}

}  // namespace dermseg
