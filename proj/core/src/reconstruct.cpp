#include "hairnet/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "hairnet/errors.hpp"
#include "hairnet/losses.hpp"
#include "hairnet/parallel.hpp"

namespace hairnet {

Polyline smooth(std::span<const Vec3> positions, double sigma) {
    const int m = static_cast<int>(positions.size());
    if (m < 3 || sigma <= 0.0) {
        Polyline out(positions.begin(), positions.end());
        if (!out.empty()) out[0] = {};
        return out;
    }
    const int half = static_cast<int>(std::floor(3.0 * sigma));
    std::vector<double> w(2 * half + 1);
    double wsum = 0.0;
    for (int k = -half; k <= half; ++k) wsum += w[k + half] = std::exp(-0.5 * k * k / (sigma * sigma));
    for (auto& v : w) v /= wsum;

    // Point reflection through the end samples keeps straight strands straight.
    auto at = [&](int j) -> Vec3 {
        if (j < 0) return positions[0] * 2.0 - positions[std::min(-j, m - 1)];
        if (j >= m) return positions[m - 1] * 2.0 - positions[std::max(2 * (m - 1) - j, 0)];
        return positions[j];
    };
    Polyline out(m);
    for (int j = 1; j < m; ++j) {
        Vec3 acc;
        for (int k = -half; k <= half; ++k) acc += at(j + k) * w[k + half];
        out[j] = acc;
    }
    return out;
}

double mean_interior_curvature(std::span<const Vec3> points) {
    if (points.size() < 3) return 0.0;
    const auto k = discrete_curvature(points);
    double s = 0.0;
    for (std::size_t j = 1; j + 1 < k.size(); ++j) s += k[j];
    return s / static_cast<double>(k.size() - 2);
}

Polyline resynthesize_curliness(std::span<const Vec3> strand, std::span<const double> predicted, const CurlOptions& opts,
                                CurlReport* report) {
    const std::size_t m = strand.size();
    Polyline input(strand.begin(), strand.end());
    CurlReport rep;
    if (m < 3 || predicted.size() != m) {
        if (report) *report = rep;
        return input;
    }
    const auto own = discrete_curvature(strand);
    double mean_pred = 0.0, mean_diff = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        mean_pred += std::abs(predicted[j]);
        mean_diff += std::abs(predicted[j] - own[j]);
    }
    mean_pred /= static_cast<double>(m);
    mean_diff /= static_cast<double>(m);
    double target = 0.0;
    for (std::size_t j = 1; j + 1 < m; ++j) target += std::max(0.0, predicted[j]);
    target /= static_cast<double>(m - 2);
    rep.target = target;
    rep.achieved = mean_interior_curvature(strand);
    if (mean_diff <= opts.threshold_scale * mean_pred || target <= 0.0) {
        if (report) *report = rep;
        return input;
    }

    // Arc length, tangents and a parallel-transported frame.
    std::vector<double> s(m, 0.0);
    for (std::size_t j = 1; j < m; ++j) s[j] = s[j - 1] + norm(strand[j] - strand[j - 1]);
    const double spacing = s[m - 1] / static_cast<double>(m - 1);
    if (spacing <= 0.0) {
        if (report) *report = rep;
        return input;
    }
    std::vector<Vec3> tangent(m), normal(m), binormal(m);
    std::vector<bool> valid(m, true);
    for (std::size_t j = 0; j < m; ++j) {
        const Vec3 d = strand[std::min(j + 1, m - 1)] - strand[j == 0 ? 0 : j - 1];
        valid[j] = norm(d) > 1e-12;
        tangent[j] = normalized(d);
    }
    Vec3 t0 = tangent[0];
    for (std::size_t j = 0; j < m && norm(t0) == 0.0; ++j) t0 = tangent[j];
    Vec3 nrm = normalized(cross(t0, std::abs(t0.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0}));
    for (std::size_t j = 0; j < m; ++j) {
        if (valid[j]) {
            const Vec3 cand = nrm - tangent[j] * dot(nrm, tangent[j]);
            if (norm(cand) > 1e-12) nrm = normalized(cand);
            normal[j] = nrm;
            binormal[j] = normalized(cross(tangent[j], nrm));
        }
    }

    const double omega =
        std::min(opts.omega_factor * target, 2.0 * std::numbers::pi / (opts.min_samples_per_turn * spacing));
    const double ramp = std::max(2.0 * spacing, 0.1 * s[m - 1]);
    auto offset = [&](double amplitude) {
        Polyline out = input;
        for (std::size_t j = 1; j < m; ++j) {
            if (!valid[j]) continue;
            const double a = amplitude * std::min(1.0, s[j] / ramp);
            out[j] += (normal[j] * std::sin(omega * s[j]) + binormal[j] * std::cos(omega * s[j])) * a;
        }
        return out;
    };
    auto residual = [&](double amplitude) { return mean_interior_curvature(offset(amplitude)) - target; };

    double lo = 0.0, hi = 1.0 / omega;
    if (residual(lo) >= 0.0) {
        if (report) *report = rep;
        return input;
    }
    for (int grow = 0; grow < 4 && residual(hi) < 0.0; ++grow) hi *= 2.0;
    for (int it = 0; it < opts.bisection_steps; ++it) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) < 0.0 ? lo : hi) = mid;
    }
    const double amplitude = 0.5 * (lo + hi);
    Polyline out = offset(amplitude);
    rep.applied = true;
    rep.amplitude = amplitude;
    rep.omega = omega;
    rep.achieved = mean_interior_curvature(out);
    if (report) *report = rep;
    return out;
}

HairModel refine(const HairModel& model, const CurlOptions& opts) {
    HairModel out = model;
    parallel_for(out.strands.size(), [&](std::size_t i) {
        const auto& src = model.strands[i];
        const Polyline smoothed = smooth(strand_polyline(src));
        std::vector<double> predicted(src.curvatures.begin(), src.curvatures.end());
        assign_strand(out.strands[i], resynthesize_curliness(smoothed, predicted, opts));
    });
    return out;
}

ScalpGrid network_grid(const ScaleProfile& profile, const Pose& pose, const EllipsoidSet& body) {
    ScalpGrid g = make_scalp_grid(profile.scalp_res, profile.scalp_res, body.head());
    if (!pose.is_identity()) {
        for (std::size_t i = 0; i < g.roots.size(); ++i) {
            g.roots[i] = Vec3f(pose.apply(Vec3(g.roots[i])));
            g.normals[i] = Vec3f(pose.rotate(Vec3(g.normals[i])));
        }
    }
    return g;
}

nn::Tensor<float> sample_features(const nn::Tensor<float>& features, std::span<const std::pair<double, double>> uv) {
    if (features.rank() != 3) throw ShapeError("feature grid must be C x H x W, got " + nn::shape_string(features.shape));
    const int c = features.dim(0), h = features.dim(1), w = features.dim(2);
    const int p = static_cast<int>(uv.size());
    nn::Tensor<float> out({c, 1, p});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int k = 0; k < p; ++k) {
        const double x = std::clamp(uv[k].first * w - 0.5, 0.0, static_cast<double>(w - 1));
        const double y = std::clamp(uv[k].second * h - 0.5, 0.0, static_cast<double>(h - 1));
        const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
        const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
        const double fx = x - x0, fy = y - y0;
        const double w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy), w10 = (1 - fx) * fy, w11 = fx * fy;
        for (int ch = 0; ch < c; ++ch) {
            const float* f = features.data.data() + ch * plane;
            const double v = w00 * f[y0 * w + x0] + w01 * f[y0 * w + x1] + w10 * f[y1 * w + x0] + w11 * f[y1 * w + x1];
            out.data[static_cast<std::size_t>(ch) * p + k] = static_cast<float>(v);
        }
    }
    return out;
}

std::pair<int, int> lattice_shape(int n) {
    if (n < 1) throw std::invalid_argument("strand count must be positive");
    for (int r = static_cast<int>(std::sqrt(static_cast<double>(n))); r >= 1; --r) {
        if (n % r == 0) return {r, n / r};
    }
    return {1, n};
}

HairModel upsample(const HairNetParams<float>& params, const nn::Tensor<float>& features, const UpsampleOptions& opts) {
    const ScaleProfile& prof = params.profile;
    if (opts.target_strands < prof.strands()) {
        throw std::invalid_argument("upsampling target " + std::to_string(opts.target_strands) + " is below the grid's " +
                                    std::to_string(prof.strands()) + " strands");
    }
    const auto [rows, cols] = lattice_shape(opts.target_strands);
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::pair<double, double>> uv;
    uv.reserve(static_cast<std::size_t>(rows) * cols);
    ScalpGrid grid;
    grid.rows = rows;
    grid.cols = cols;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double ju = opts.jitter ? unit(rng) : 0.5;
            const double jv = opts.jitter ? unit(rng) : 0.5;
            const double u = (c + ju) / cols, v = (r + jv) / rows;
            uv.emplace_back(u, v);
            const auto sp = scalp_point(u, v, opts.body.head(), opts.scalp);
            grid.roots.emplace_back(opts.pose.apply(sp.position));
            grid.normals.emplace_back(opts.pose.rotate(sp.normal));
        }
    }

    nn::Tape<float> tape;
    const auto bound = bind(tape, params);
    const auto strands = decode_strands(bound, tape.constant(sample_features(features, uv)));
    return model_from_network(strands.positions.value(), strands.curvatures.value(), grid);
}

HairModel latent_interpolate(const HairNetParams<float>& params, const nn::Tensor<float>& z_a,
                             const nn::Tensor<float>& z_b, double t, const Pose& pose) {
    const auto f = static_cast<std::size_t>(params.profile.feature_dim);
    if (z_a.size() != f || z_b.size() != f) {
        throw ShapeError("latent vectors of length " + std::to_string(z_a.size()) + " and " + std::to_string(z_b.size()) +
                         " do not match feature_dim " + std::to_string(f));
    }
    nn::Tensor<float> z(z_a.shape);
    for (std::size_t k = 0; k < f; ++k) {
        z.data[k] = static_cast<float>((1.0 - t) * static_cast<double>(z_a.data[k]) + t * static_cast<double>(z_b.data[k]));
    }
    return prediction_model(decode_latent(params, z), params.profile, pose);
}

HairModel prediction_model(const Prediction& prediction, const ScaleProfile& profile, const Pose& pose) {
    return model_from_network(prediction.positions, prediction.curvatures, network_grid(profile, pose));
}

}  // namespace hairnet
