#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hairnet/orientation.hpp"
#include "hairnet/parallel.hpp"

namespace hairnet {

namespace {

struct Kernel {
    int radius = 0;
    std::vector<float> even;  // (2r+1)^2, row-major over (dy, dx)
    std::vector<float> odd;
};

// Zero-mean quadrature Gabor pair tuned to strands running at angle theta (y up). The response
// magnitude of the pair does not depend on where a pixel sits within a stripe.
Kernel make_kernel(double theta, const GaborParams& p) {
    Kernel k;
    k.radius = static_cast<int>(std::ceil(3.0 * p.sigma / std::min(1.0, p.gamma)));
    const int side = 2 * k.radius + 1;
    k.even.resize(static_cast<std::size_t>(side) * side);
    k.odd.resize(k.even.size());
    const double c = std::cos(theta), s = std::sin(theta);
    double sum_even = 0.0, sum_odd = 0.0;
    for (int dy = -k.radius; dy <= k.radius; ++dy) {
        for (int dx = -k.radius; dx <= k.radius; ++dx) {
            const double yu = -dy;
            const double across = -dx * s + yu * c;
            const double along = dx * c + yu * s;
            const double env = std::exp(-(across * across + p.gamma * p.gamma * along * along) / (2.0 * p.sigma * p.sigma));
            const double phase = 2.0 * std::numbers::pi * across / p.wavelength;
            const auto idx = static_cast<std::size_t>(dy + k.radius) * side + (dx + k.radius);
            k.even[idx] = static_cast<float>(env * std::cos(phase));
            k.odd[idx] = static_cast<float>(env * std::sin(phase));
            sum_even += k.even[idx];
            sum_odd += k.odd[idx];
        }
    }
    const auto n = static_cast<double>(k.even.size());
    for (auto& t : k.even) t -= static_cast<float>(sum_even / n);
    for (auto& t : k.odd) t -= static_cast<float>(sum_odd / n);
    return k;
}

}  // namespace

GaborParams GaborParams::for_resolution(int res) {
    GaborParams p;
    const double f = res / 256.0;
    p.wavelength = std::max(4.0 * f, 3.0);
    p.sigma = std::max(2.0 * f, 1.5);
    return p;
}

OrientationField gabor_orientation(const GrayImage& image, std::span<const std::uint8_t> hair_mask,
                                   const GaborParams& params) {
    const auto npix = static_cast<std::size_t>(image.width) * image.height;
    if (hair_mask.size() != npix || image.data.size() != npix) {
        throw std::invalid_argument("gabor_orientation: image and mask sizes differ");
    }
    OrientationField out;
    out.height = image.height;
    out.width = image.width;
    out.theta.assign(npix, 0.0f);
    out.confidence.assign(npix, 0.0f);

    std::vector<Kernel> bank;
    for (int k = 0; k < params.orientations; ++k) {
        bank.push_back(make_kernel(std::numbers::pi * k / params.orientations, params));
    }
    const int w = image.width, h = image.height;
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t yy) {
        const int y = static_cast<int>(yy);
        for (int x = 0; x < w; ++x) {
            const auto p = static_cast<std::size_t>(y) * w + x;
            if (!hair_mask[p]) continue;
            double best = -1.0, total = 0.0;
            int best_k = 0;
            for (int k = 0; k < params.orientations; ++k) {
                const auto& ker = bank[k];
                const int r = ker.radius, side = 2 * r + 1;
                double re = 0.0, im = 0.0;
                for (int dy = -r; dy <= r; ++dy) {
                    const int sy = std::clamp(y + dy, 0, h - 1);
                    const float* row = image.data.data() + static_cast<std::size_t>(sy) * w;
                    const auto off = static_cast<std::size_t>(dy + r) * side;
                    const float* ev = ker.even.data() + off;
                    const float* od = ker.odd.data() + off;
                    for (int dx = -r; dx <= r; ++dx) {
                        const float v = row[std::clamp(x + dx, 0, w - 1)];
                        re += ev[dx + r] * v;
                        im += od[dx + r] * v;
                    }
                }
                const double resp = std::sqrt(re * re + im * im);
                total += resp;
                if (resp > best) {
                    best = resp;
                    best_k = k;
                }
            }
            out.theta[p] = static_cast<float>(std::numbers::pi * best_k / params.orientations);
            out.confidence[p] = static_cast<float>(best - total / params.orientations);
        }
    });
    return out;
}

OrientationImage orientation_from_photo(const GrayImage& image, std::span<const std::uint8_t> labels,
                                        const GaborParams& params) {
    const auto npix = static_cast<std::size_t>(image.width) * image.height;
    if (labels.size() != npix) throw std::invalid_argument("label map size differs from image");
    std::vector<std::uint8_t> hair(npix);
    for (std::size_t p = 0; p < npix; ++p) hair[p] = labels[p] >= 192 ? 1 : 0;
    const auto field = gabor_orientation(image, hair, params);
    OrientationImage out(image.height, image.width);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const auto p = static_cast<std::size_t>(y) * image.width + x;
            if (hair[p]) {
                const auto [c0, c1] = encode_angle(field.theta[p]);
                out.at(0, y, x) = c0;
                out.at(1, y, x) = c1;
                out.at(2, y, x) = OrientationImage::kHair;
            } else if (labels[p] >= 64) {
                out.at(2, y, x) = OrientationImage::kBody;
            }
        }
    }
    return out;
}

}  // namespace hairnet
