#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "vloc/nn/tape.hpp"

namespace vloc::nn {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst; // "name[i]"
    std::size_t checked = 0;
};

/// Central-difference check of every component of the parameters the loss
/// binds with Tape::param (or at most `max_per_tensor` evenly strided
/// components per tensor when nonzero).
///
/// `fn(tape, params)` must be generic over the scalar type: gradients are
/// taken in double, while the difference quotients are evaluated in long
/// double so that directions with an exactly zero gradient are not swamped
/// by rounding in the loss. Error per component is
/// |a − n| / max(|a|, |n|, 1e-8).
template <typename Fn>
GradCheckResult grad_check(const Fn& fn, const ParamStore<double>& params, double h = 1e-5,
                           std::size_t max_per_tensor = 0) {
    GradStore<double> analytic;
    {
        Tape<double> tape(true);
        Var<double> loss = fn(tape, params);
        tape.backward(loss);
        analytic = tape.param_grads();
    }
    using Wide = long double;
    ParamStore<Wide> wide = params.template cast<Wide>();
    auto eval = [&] {
        Tape<Wide> tape(false);
        return fn(tape, std::as_const(wide)).value()(0, 0);
    };
    GradCheckResult res;
    for (auto& [name, tensor] : wide) {
        const auto it = analytic.find(name);
        if (it == analytic.end()) continue; // never bound on the tape: a constant
        const auto n = static_cast<std::size_t>(tensor.size());
        const std::size_t stride = max_per_tensor == 0 || n <= max_per_tensor ? 1 : n / max_per_tensor;
        for (std::size_t i = 0; i < n; i += stride) {
            Wide& x = tensor.data()[i];
            const Wide saved = x;
            x = saved + h;
            const Wide up = eval();
            x = saved - h;
            const Wide down = eval();
            x = saved;
            const double num = static_cast<double>((up - down) / (2 * static_cast<Wide>(h)));
            const double a = it->second.data()[i];
            const double err = std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-8});
            ++res.checked;
            if (err > res.max_rel_error) {
                res.max_rel_error = err;
                res.worst = name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return res;
}

} // namespace vloc::nn
