#include "hairnet/losses.hpp"

#include <algorithm>
#include <cmath>

#include "hairnet/errors.hpp"

namespace hairnet {

using nn::Tensor;
using nn::Var;

namespace {

void check_cells(const HairModel& model, int height, int width) {
    if (model.strand_count() != height * width) {
        throw ShapeError("model has " + std::to_string(model.strand_count()) + " strands, layout expects " +
                         std::to_string(height) + "x" + std::to_string(width));
    }
}

template <typename T>
void check_same(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (a.shape != b.shape) {
        throw ShapeError(std::string(what) + ": " + nn::shape_string(a.shape) + " vs " + nn::shape_string(b.shape));
    }
}

/// (cells, samples) of a position tensor.
std::pair<int, int> position_layout(const nn::Shape& s) {
    if (s.size() != 3 || s[0] % 3 != 0) throw ShapeError("position tensor must be 3M x H x W, got " + nn::shape_string(s));
    return {s[1] * s[2], s[0] / 3};
}

template <typename T>
std::vector<Vec3> locals_from(const Tensor<T>& pos) {
    const auto [n, m] = position_layout(pos.shape);
    std::vector<Vec3> out(static_cast<std::size_t>(n) * m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const std::size_t base = static_cast<std::size_t>(3 * j) * n + i;
            out[static_cast<std::size_t>(i) * m + j] = {static_cast<double>(pos.data[base]),
                                                        static_cast<double>(pos.data[base + n]),
                                                        static_cast<double>(pos.data[base + 2 * n])};
        }
    }
    return out;
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double segment_length(const Vec3& d, bool euclidean) {
    return euclidean ? norm(d) : std::abs(d.x) + std::abs(d.y) + std::abs(d.z);
}

Vec3 segment_length_gradient(const Vec3& d, bool euclidean) {
    if (!euclidean) return {sgn(d.x), sgn(d.y), sgn(d.z)};
    const double n = norm(d);
    return n > 0.0 ? d / n : Vec3{};
}

}  // namespace

template <typename T>
Tensor<T> positions_tensor(const HairModel& model, int height, int width) {
    check_cells(model, height, width);
    const int n = height * width;
    const int m = model.samples_per_strand();
    Tensor<T> t({3 * m, height, width});
    for (int i = 0; i < n; ++i) {
        const auto& s = model.strands[i].samples;
        for (int j = 0; j < m; ++j) {
            for (int a = 0; a < 3; ++a) t.data[static_cast<std::size_t>(3 * j + a) * n + i] = static_cast<T>(s[j][a]);
        }
    }
    return t;
}

template <typename T>
Tensor<T> curvatures_tensor(const HairModel& model, int height, int width) {
    check_cells(model, height, width);
    const int n = height * width;
    const int m = model.samples_per_strand();
    Tensor<T> t({m, height, width});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            t.data[static_cast<std::size_t>(j) * n + i] = static_cast<T>(model.strands[i].curvatures[j]);
        }
    }
    return t;
}

HairModel model_from_network(const Tensor<float>& positions, const Tensor<float>& curvatures, const ScalpGrid& grid) {
    const auto [n, m] = position_layout(positions.shape);
    if (n != grid.size()) throw ShapeError("network output has " + std::to_string(n) + " cells, grid has " + std::to_string(grid.size()));
    if (curvatures.shape != nn::Shape{m, positions.shape[1], positions.shape[2]}) {
        throw ShapeError("curvature tensor " + nn::shape_string(curvatures.shape) + " does not match positions");
    }
    HairModel model;
    model.grid = grid;
    model.strands.resize(n);
    for (int i = 0; i < n; ++i) {
        auto& s = model.strands[i];
        s.samples.resize(m);
        s.curvatures.resize(m);
        for (int j = 0; j < m; ++j) {
            if (j > 0) {
                const std::size_t base = static_cast<std::size_t>(3 * j) * n + i;
                s.samples[j] = {positions.data[base], positions.data[base + n], positions.data[base + 2 * n]};
            }
            s.curvatures[j] = std::max(0.0f, curvatures.data[static_cast<std::size_t>(j) * n + i]);
        }
    }
    return model;
}

std::vector<Vec3> network_strand(const Tensor<float>& positions, int strand) {
    const auto [n, m] = position_layout(positions.shape);
    std::vector<Vec3> out(m);
    for (int j = 0; j < m; ++j) {
        const std::size_t base = static_cast<std::size_t>(3 * j) * n + strand;
        out[j] = {positions.data[base], positions.data[base + n], positions.data[base + 2 * n]};
    }
    return out;
}

template <typename T>
Tensor<T> VisibilityWeights::tensor(std::span<const std::uint8_t> visible, int samples, int height, int width,
                                    bool uniform) {
    const int n = height * width;
    if (visible.size() != static_cast<std::size_t>(n) * samples) {
        throw ShapeError("visibility has " + std::to_string(visible.size()) + " entries, expected " +
                         std::to_string(static_cast<std::size_t>(n) * samples));
    }
    Tensor<T> w({samples, height, width});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < samples; ++j) {
            const double v = uniform ? 1.0 : (visible[static_cast<std::size_t>(i) * samples + j] ? kVisible : kInvisible);
            w.data[static_cast<std::size_t>(j) * n + i] = static_cast<T>(v);
        }
    }
    return w;
}

template <typename T>
double pos_loss_value(const Tensor<T>& pred, const Tensor<T>& gt, const Tensor<T>& weights) {
    check_same(pred, gt, "loss_pos");
    const auto [n, m] = position_layout(pred.shape);
    if (weights.size() != static_cast<std::size_t>(n) * m) throw ShapeError("loss_pos: weight tensor " + nn::shape_string(weights.shape));
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < n; ++i) {
            double d2 = 0.0;
            for (int a = 0; a < 3; ++a) {
                const std::size_t k = static_cast<std::size_t>(3 * j + a) * n + i;
                const double d = static_cast<double>(pred.data[k]) - static_cast<double>(gt.data[k]);
                d2 += d * d;
            }
            sum += static_cast<double>(weights.data[static_cast<std::size_t>(j) * n + i]) * d2;
        }
    }
    return sum / (static_cast<double>(n) * m);
}

template <typename T>
double curv_loss_value(const Tensor<T>& pred, const Tensor<T>& gt, const Tensor<T>& weights) {
    check_same(pred, gt, "loss_curv");
    check_same(pred, weights, "loss_curv weights");
    double sum = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double d = static_cast<double>(pred.data[k]) - static_cast<double>(gt.data[k]);
        sum += static_cast<double>(weights.data[k]) * d * d;
    }
    return sum / static_cast<double>(pred.size());
}

double collision_value(std::span<const Vec3> points, int samples, const EllipsoidSet& body, bool euclidean) {
    const std::size_t n = points.size() / samples;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3* p = points.data() + i * samples;
        for (int j = 1; j < samples; ++j) {
            const double len = segment_length(p[j] - p[j - 1], euclidean);
            for (const auto& e : body.items) {
                const double d = e.dist(p[j]);
                if (d > 0.0) sum += len * d;
            }
        }
    }
    return sum / (static_cast<double>(n) * samples);
}

std::vector<Vec3> head_frame_points(std::span<const Vec3> roots_cam, std::span<const Vec3> locals, int samples,
                                    const Pose& pose) {
    std::vector<Vec3> out(locals.size());
    for (std::size_t k = 0; k < locals.size(); ++k) out[k] = pose.apply_inverse(roots_cam[k / samples] + locals[k]);
    return out;
}

double collision_value(const HairModel& model, const EllipsoidSet& body, const Pose& pose, bool euclidean) {
    const int m = model.samples_per_strand();
    std::vector<Vec3> roots(model.grid.roots.begin(), model.grid.roots.end());
    std::vector<Vec3> locals;
    locals.reserve(static_cast<std::size_t>(model.strand_count()) * m);
    for (const auto& s : model.strands) {
        for (const auto& p : s.samples) locals.emplace_back(p);
    }
    return collision_value(head_frame_points(roots, locals, m, pose), m, body, euclidean);
}

template <typename T>
Var<T> loss_pos(const Var<T>& pred, const Tensor<T>& gt, const Tensor<T>& weights) {
    const double value = pos_loss_value(pred.value(), gt, weights);
    const int pi = pred.id();
    return pred.tape()->record(Tensor<T>({1}, {static_cast<T>(value)}), {pi}, [pi, gt, weights](nn::Tape<T>& t, int self) {
        const auto& pv = t.value(pi);
        const int n = pv.shape[1] * pv.shape[2];
        const int m = pv.shape[0] / 3;
        const double g = static_cast<double>(t.grad(self)[0]) * 2.0 / (static_cast<double>(n) * m);
        auto& dx = t.grad_buffer(pi);
        for (std::size_t k = 0; k < dx.size(); ++k) {
            const std::size_t cell = k % n;
            const std::size_t j = k / n / 3;
            const double w = static_cast<double>(weights.data[j * n + cell]);
            dx[k] += static_cast<T>(g * w * (static_cast<double>(pv.data[k]) - static_cast<double>(gt.data[k])));
        }
    });
}

template <typename T>
Var<T> loss_curv(const Var<T>& pred, const Tensor<T>& gt, const Tensor<T>& weights) {
    const double value = curv_loss_value(pred.value(), gt, weights);
    const int pi = pred.id();
    return pred.tape()->record(Tensor<T>({1}, {static_cast<T>(value)}), {pi}, [pi, gt, weights](nn::Tape<T>& t, int self) {
        const auto& pv = t.value(pi);
        const double g = static_cast<double>(t.grad(self)[0]) * 2.0 / static_cast<double>(pv.size());
        auto& dx = t.grad_buffer(pi);
        for (std::size_t k = 0; k < dx.size(); ++k) {
            dx[k] += static_cast<T>(g * static_cast<double>(weights.data[k]) *
                                    (static_cast<double>(pv.data[k]) - static_cast<double>(gt.data[k])));
        }
    });
}

template <typename T>
Var<T> loss_collision(const Var<T>& pred, const CollisionContext& ctx) {
    const auto [n, m] = position_layout(pred.shape());
    if (ctx.roots.size() != static_cast<std::size_t>(n)) {
        throw ShapeError("collision context has " + std::to_string(ctx.roots.size()) + " roots for " + std::to_string(n) + " cells");
    }
    const auto points = head_frame_points(ctx.roots, locals_from(pred.value()), m, ctx.pose);
    const double value = collision_value(points, m, ctx.body, ctx.euclidean);
    const int pi = pred.id();
    return pred.tape()->record(Tensor<T>({1}, {static_cast<T>(value)}), {pi}, [pi, points, ctx, n = n, m = m](nn::Tape<T>& t, int self) {
        const double g = static_cast<double>(t.grad(self)[0]) / (static_cast<double>(n) * m);
        std::vector<Vec3> dq(points.size());
        for (int i = 0; i < n; ++i) {
            const Vec3* p = points.data() + static_cast<std::size_t>(i) * m;
            Vec3* d = dq.data() + static_cast<std::size_t>(i) * m;
            for (int j = 1; j < m; ++j) {
                const Vec3 seg = p[j] - p[j - 1];
                const double len = segment_length(seg, ctx.euclidean);
                const Vec3 dlen = segment_length_gradient(seg, ctx.euclidean);
                for (const auto& e : ctx.body.items) {
                    const double dist = e.dist(p[j]);
                    if (dist <= 0.0) continue;
                    d[j] += dlen * dist - e.outward_gradient(p[j]) * len;
                    d[j - 1] -= dlen * dist;
                }
            }
        }
        auto& dx = t.grad_buffer(pi);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < m; ++j) {
                const Vec3 dp = ctx.pose.rotate(dq[static_cast<std::size_t>(i) * m + j]) * g;
                const std::size_t base = static_cast<std::size_t>(3 * j) * n + i;
                dx[base] += static_cast<T>(dp.x);
                dx[base + n] += static_cast<T>(dp.y);
                dx[base + 2 * n] += static_cast<T>(dp.z);
            }
        }
    });
}

double combine(const LossComponents& c, const LossOptions& opts) {
    double total = c.pos;
    if (!opts.no_curvature) total += opts.lambda_curv * c.curv;
    if (!opts.no_collision) total += opts.lambda_col * c.col;
    return total;
}

template <typename T>
LossResult<T> loss_total(const Var<T>& positions, const Var<T>& curvatures, const LossTargets<T>& targets,
                         const LossOptions& opts) {
    CollisionContext ctx = targets.collision;
    ctx.euclidean = ctx.euclidean || opts.euclidean_collision;
    const int m = positions.shape()[0] / 3;

    LossResult<T> r;
    r.values.pos = pos_loss_value(positions.value(), targets.positions, targets.weights);
    r.values.curv = curv_loss_value(curvatures.value(), targets.curvatures, targets.weights);
    r.values.col = collision_value(head_frame_points(ctx.roots, locals_from(positions.value()), m, ctx.pose), m,
                                   ctx.body, ctx.euclidean);
    r.values.total = combine(r.values, opts);

    r.total = loss_pos(positions, targets.positions, targets.weights);
    if (!opts.no_curvature) {
        r.total = nn::axpby(T(1), r.total, static_cast<T>(opts.lambda_curv),
                            loss_curv(curvatures, targets.curvatures, targets.weights));
    }
    if (!opts.no_collision) {
        r.total = nn::axpby(T(1), r.total, static_cast<T>(opts.lambda_col), loss_collision(positions, ctx));
    }
    return r;
}

#define HAIRNET_LOSSES_INSTANTIATE(T)                                                                          \
    template Tensor<T> positions_tensor<T>(const HairModel&, int, int);                                       \
    template Tensor<T> curvatures_tensor<T>(const HairModel&, int, int);                                      \
    template Tensor<T> VisibilityWeights::tensor<T>(std::span<const std::uint8_t>, int, int, int, bool);      \
    template double pos_loss_value(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                     \
    template double curv_loss_value(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                    \
    template Var<T> loss_pos(const Var<T>&, const Tensor<T>&, const Tensor<T>&);                              \
    template Var<T> loss_curv(const Var<T>&, const Tensor<T>&, const Tensor<T>&);                             \
    template Var<T> loss_collision(const Var<T>&, const CollisionContext&);                                   \
    template LossResult<T> loss_total(const Var<T>&, const Var<T>&, const LossTargets<T>&, const LossOptions&);

HAIRNET_LOSSES_INSTANTIATE(float)
HAIRNET_LOSSES_INSTANTIATE(double)

}  // namespace hairnet
