#include "vloc/nn/adam.hpp"

#include <cmath>

namespace vloc::nn {

void adam_step(ParamStore<float>& params, const GradStore<float>& grads, AdamState& state) {
    for (const auto& [name, g] : grads) {
        const auto& p = params.at(name);
        if (p.rows() != g.rows() || p.cols() != g.cols())
            throw ShapeMismatch("adam_step: gradient shape differs for '" + name + "'");
    }
    ++state.t;
    const auto& c = state.cfg;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
    const float b1 = static_cast<float>(c.beta1), b2 = static_cast<float>(c.beta2);
    const float step = static_cast<float>(c.lr / bc1);
    const float inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));
    const float eps = static_cast<float>(c.eps);
    for (const auto& [name, g] : grads) {
        auto& p = params.at(name);
        auto [mi, m_new] = state.m.try_emplace(name, Tensor<float>::Zero(p.rows(), p.cols()));
        auto [vi, v_new] = state.v.try_emplace(name, Tensor<float>::Zero(p.rows(), p.cols()));
        auto m = mi->second.array();
        auto v = vi->second.array();
        m = b1 * m + (1.0f - b1) * g.array();
        v = b2 * v + (1.0f - b2) * g.array().square();
        p.array() -= step * m / (v.sqrt() * inv_sqrt_bc2 + eps);
    }
}

} // namespace vloc::nn
