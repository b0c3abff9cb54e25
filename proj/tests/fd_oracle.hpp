#pragma once

// Central-difference gradient oracle used by the tests. It shares no code with the library's
// own gradient checker.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "hairnet/tensor.hpp"

namespace hairnet::test {

template <typename T>
using ScalarFn = std::function<nn::Var<T>(nn::Tape<T>&, const std::vector<nn::Var<T>>&)>;

template <typename T>
T evaluate(const ScalarFn<T>& f, const std::vector<nn::Tensor<T>>& inputs) {
    nn::Tape<T> tape;
    std::vector<nn::Var<T>> vars;
    for (const auto& t : inputs) vars.push_back(tape.leaf(t));
    return f(tape, vars).item();
}

/// ||analytic - numeric|| / max(||analytic||, ||numeric||) over all input entries.
template <typename T>
double fd_relative_error(const ScalarFn<T>& f, std::vector<nn::Tensor<T>> inputs, double h) {
    nn::Tape<T> tape;
    std::vector<nn::Var<T>> vars;
    for (const auto& t : inputs) vars.push_back(tape.leaf(t));
    const auto out = f(tape, vars);
    tape.backward(out);
    double diff = 0.0, na = 0.0, nn_ = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const auto g = vars[k].grad();
        for (std::size_t e = 0; e < inputs[k].size(); ++e) {
            const T saved = inputs[k].data[e];
            inputs[k].data[e] = static_cast<T>(saved + h);
            const double up = evaluate(f, inputs);
            inputs[k].data[e] = static_cast<T>(saved - h);
            const double down = evaluate(f, inputs);
            inputs[k].data[e] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = g.empty() ? 0.0 : static_cast<double>(g[e]);
            diff += (analytic - numeric) * (analytic - numeric);
            na += analytic * analytic;
            nn_ += numeric * numeric;
        }
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nn_), 1e-12});
    return std::sqrt(diff) / denom;
}

template <typename T>
nn::Tensor<T> random_tensor(nn::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    nn::Tensor<T> t(std::move(shape));
    std::uniform_real_distribution<double> u(lo, hi);
    for (auto& v : t.data) v = static_cast<T>(u(rng));
    return t;
}

}  // namespace hairnet::test
