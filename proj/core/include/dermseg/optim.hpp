#pragma once

#include <map>
#include <string>

#include "dermseg/params.hpp"

namespace dermseg {

// Adam with bias correction; only the learning rate is configurable by the
// training setup, the rest are the canonical defaults.
struct AdamConfig {
    double lr = 0.0002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class AdamState {
public:
    explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

    // One update from the gradients currently held in the store; the step
    // counter increments once per call.
    void step(ParamStore& params);

    int64_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    struct Moments {
        Tensor m;
        Tensor v;
    };
    AdamConfig cfg_;
    int64_t t_ = 0;
    std::map<std::string, Moments> moments_;
};

}  // namespace dermseg
