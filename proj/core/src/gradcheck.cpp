#include "hairnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace hairnet::nn {

GradCheckResult check_gradients(const ScalarFunction& f, const std::vector<Tensor<double>>& inputs, double step,
                                std::size_t max_entries, std::uint64_t seed) {
    std::vector<std::vector<double>> analytic(inputs.size());
    {
        Tape<double> tape;
        std::vector<Var<double>> vars;
        for (const auto& t : inputs) vars.push_back(tape.leaf(t));
        tape.backward(f(tape, vars));
        for (std::size_t k = 0; k < vars.size(); ++k) {
            const auto g = vars[k].grad();
            analytic[k].assign(inputs[k].size(), 0.0);
            std::copy(g.begin(), g.end(), analytic[k].begin());
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> all;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (std::size_t e = 0; e < inputs[k].size(); ++e) all.emplace_back(k, e);
    }
    if (max_entries > 0 && all.size() > max_entries) {
        std::mt19937_64 rng(seed);
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(max_entries);
    }

    auto evaluate = [&](const std::vector<Tensor<double>>& xs) {
        Tape<double> tape;
        std::vector<Var<double>> vars;
        for (const auto& t : xs) vars.push_back(tape.constant(t));
        return f(tape, vars).item();
    };

    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    std::vector<Tensor<double>> xs = inputs;
    for (const auto& [k, e] : all) {
        const double x0 = xs[k].data[e];
        xs[k].data[e] = x0 + step;
        const double up = evaluate(xs);
        xs[k].data[e] = x0 - step;
        const double down = evaluate(xs);
        xs[k].data[e] = x0;
        const double numeric = (up - down) / (2.0 * step);
        const double a = analytic[k][e];
        diff2 += (a - numeric) * (a - numeric);
        a2 += a * a;
        n2 += numeric * numeric;
    }
    GradCheckResult r;
    r.checked = all.size();
    r.rel_error = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
    return r;
}

}  // namespace hairnet::nn
