#pragma once

#include <cstdint>

#include "vloc/nn/tensor.hpp"

namespace vloc::nn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Moments keyed by parameter name; created lazily on the first step.
struct AdamState {
    AdamConfig cfg;
    std::int64_t t = 0;
    std::map<std::string, Tensor<float>, std::less<>> m, v;
};

/// One bias-corrected Adam update. Parameters absent from `grads` are left
/// alone; a gradient without a matching parameter is an error.
void adam_step(ParamStore<float>& params, const GradStore<float>& grads, AdamState& state);

} // namespace vloc::nn
