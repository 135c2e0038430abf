// Central finite-difference verification of reverse-mode gradients.

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dverg/param_store.hpp"
#include "dverg/tensor.hpp"

namespace dverg {

// Compares backward() gradients of the scalar f() against central differences
// over every entry of every parameter in `params`. f must be deterministic
// and rebuild its graph on each call. Returns the max relative error
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
template <class T, class F>
double grad_check(F&& f, ParameterStore<T>& params, T eps) {
    if (!(eps > T(0))) throw std::invalid_argument("grad_check: eps must be positive");

    params.set_requires_grad(true);
    params.zero_grads();
    Tensor<T> loss = f();
    backward(loss);

    std::vector<std::vector<T>> analytic;
    analytic.reserve(params.size());
    for (auto& [name, t] : params) analytic.push_back(t.grad());

    double max_rel = 0.0;
    size_t pi = 0;
    for (auto& [name, t] : params) {
        auto& data = t.data();
        for (size_t i = 0; i < data.size(); ++i) {
            T saved = data[i];
            data[i] = saved + eps;
            double fp = static_cast<double>(f().value());
            data[i] = saved - eps;
            double fm = static_cast<double>(f().value());
            data[i] = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw std::runtime_error("grad_check: f non-finite at probe point for " + name);
            double numeric = (fp - fm) / (2.0 * static_cast<double>(eps));
            double a = static_cast<double>(analytic[pi][i]);
            double rel = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), 1e-8});
            if (rel > max_rel) max_rel = rel;
        }
        ++pi;
    }
    return max_rel;
}

}  // namespace dverg
