#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hairnet/tensor.hpp"

namespace hairnet::nn {

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moments per parameter plus the step counter.
template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    std::int64_t step = 0;

    void init_like(std::span<Tensor<T>* const> params);
};

/// One bias-corrected Adam update. Every gradient is checked first; a non-finite value
/// throws DivergenceError and leaves params and moments untouched.
template <typename T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const std::span<const T>> grads, double lr,
               AdamState<T>& state, const AdamOptions& opts = {});

}  // namespace hairnet::nn
