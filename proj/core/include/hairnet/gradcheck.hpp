#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hairnet/tensor.hpp"

namespace hairnet::nn {

struct GradCheckResult {
    double rel_error = 0.0;  // |analytic - numeric| / max(|analytic|, |numeric|) over checked entries
    std::size_t checked = 0;
};

using ScalarFunction = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

/// Central differences against the tape gradient of a scalar function of `inputs`.
/// With max_entries > 0 only that many randomly chosen entries are perturbed.
GradCheckResult check_gradients(const ScalarFunction& f, const std::vector<Tensor<double>>& inputs, double step = 1e-6,
                                std::size_t max_entries = 0, std::uint64_t seed = 0);

}  // namespace hairnet::nn
