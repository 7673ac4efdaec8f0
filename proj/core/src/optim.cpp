#include "dermseg/optim.hpp"

#include <cmath>

namespace dermseg {

void AdamState::step(ParamStore& params) {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& [name, entry] : params.entries()) {
        auto it = moments_.find(name);
        if (it == moments_.end()) {
            it = moments_.emplace(name, Moments{Tensor(entry.value.shape, 0.0),
                                                Tensor(entry.value.shape, 0.0)}).first;
        }
        Moments& mo = it->second;
        for (size_t i = 0; i < entry.value.data.size(); ++i) {
            double g = entry.grad.data[i];
            mo.m.data[i] = cfg_.beta1 * mo.m.data[i] + (1.0 - cfg_.beta1) * g;
            mo.v.data[i] = cfg_.beta2 * mo.v.data[i] + (1.0 - cfg_.beta2) * g * g;
            double m_hat = mo.m.data[i] / bc1;
            double v_hat = mo.v.data[i] / bc2;
            entry.value.data[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }
}

}  // namespace dermseg
