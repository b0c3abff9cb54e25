#include "hairnet/adam.hpp"

#include <cmath>

#include "hairnet/errors.hpp"

namespace hairnet::nn {

template <typename T>
void AdamState<T>::init_like(std::span<Tensor<T>* const> params) {
    m.clear();
    v.clear();
    for (const auto* p : params) {
        m.emplace_back(p->shape);
        v.emplace_back(p->shape);
    }
    step = 0;
}

template <typename T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const std::span<const T>> grads, double lr,
               AdamState<T>& state, const AdamOptions& opts) {
    if (params.size() != grads.size()) throw ShapeError("adam_step: parameter/gradient count mismatch");
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("adam_step: moment buffers do not match parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto n = params[i]->size();
        if (state.m[i].size() != n || state.v[i].size() != n) {
            throw ShapeError("adam_step: moment shape mismatch for parameter " + std::to_string(i));
        }
        if (!grads[i].empty() && grads[i].size() != n) {
            throw ShapeError("adam_step: gradient shape mismatch for parameter " + std::to_string(i));
        }
        for (T g : grads[i]) {
            if (!std::isfinite(g)) throw DivergenceError("divergence: non-finite gradient");
        }
    }

    state.step += 1;
    const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i]->data;
        auto& m = state.m[i].data;
        auto& v = state.v[i].data;
        const auto& g = grads[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            // A parameter that received no gradient this step is treated as g = 0.
            const double gk = g.empty() ? 0.0 : static_cast<double>(g[k]);
            const double mk = opts.beta1 * m[k] + (1.0 - opts.beta1) * gk;
            const double vk = opts.beta2 * v[k] + (1.0 - opts.beta2) * gk * gk;
            m[k] = static_cast<T>(mk);
            v[k] = static_cast<T>(vk);
            const double update = lr * (mk / bc1) / (std::sqrt(vk / bc2) + opts.epsilon);
            p[k] = static_cast<T>(p[k] - update);
        }
    }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(std::span<Tensor<float>* const>, std::span<const std::span<const float>>, double,
                        AdamState<float>&, const AdamOptions&);
template void adam_step(std::span<Tensor<double>* const>, std::span<const std::span<const double>>, double,
                        AdamState<double>&, const AdamOptions&);

}  // namespace hairnet::nn
