#include "hairnet/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hairnet/errors.hpp"
#include "hairnet/losses.hpp"
#include "hairnet/orientation.hpp"
#include "hairnet/parallel.hpp"
#include "hairnet/random.hpp"

namespace hairnet {

namespace {

constexpr double kGrowStep = 0.002;      // meters per growth step
constexpr double kSlideMargin = 0.002;   // growth keeps F >= 1 + margin
constexpr double kResolveTarget = 1e-5;  // collision resolution lands on F = 1 + target
constexpr int kMaxResolvePasses = 50;

double lerp(double a, double b, double t) { return a + (b - a) * t; }

/// Prefix of `poly` with arc length `length` (last point interpolated).
Polyline cut_polyline(const Polyline& poly, double length) {
    Polyline out{poly.front()};
    double acc = 0.0;
    for (std::size_t k = 1; k < poly.size(); ++k) {
        const double seg = norm(poly[k] - poly[k - 1]);
        if (acc + seg >= length) {
            const double t = seg > 0.0 ? (length - acc) / seg : 0.0;
            out.push_back(poly[k - 1] + (poly[k] - poly[k - 1]) * t);
            return out;
        }
        acc += seg;
        out.push_back(poly[k]);
    }
    return out;
}

/// Keeps a growing point on or outside every ellipsoid shell inflated by `margin`.
Vec3 slide_outside(Vec3 p, const EllipsoidSet& body, double margin) {
    for (const auto& e : body.items) {
        const double f = 1.0 - e.dist(p);
        if (f < 1.0 + margin && f > 0.0) p = e.center + (p - e.center) * std::sqrt((1.0 + margin) / f);
    }
    return p;
}

/// Parallel-transport frame (normal, binormal) along a polyline.
void transport_frames(const Polyline& poly, std::vector<Vec3>& normals, std::vector<Vec3>& binormals) {
    const std::size_t n = poly.size();
    std::vector<Vec3> tangents(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec3 d = poly[std::min(k + 1, n - 1)] - poly[k == 0 ? 0 : k - 1];
        tangents[k] = normalized(d);
    }
    normals.assign(n, {});
    binormals.assign(n, {});
    Vec3 ref = std::abs(tangents[0].y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
    Vec3 nrm = normalized(cross(tangents[0], ref));
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) {
            // Remove the component along the new tangent: discrete parallel transport.
            const Vec3 t = tangents[k];
            Vec3 cand = nrm - t * dot(nrm, t);
            if (norm(cand) > 1e-12) nrm = normalized(cand);
        }
        normals[k] = nrm;
        binormals[k] = normalized(cross(tangents[k], nrm));
    }
}

}  // namespace

LengthBand length_band(LengthClass c) {
    switch (c) {
        case LengthClass::XS: return {0.04, 0.10};
        case LengthClass::S: return {0.10, 0.18};
        case LengthClass::M: return {0.18, 0.30};
        case LengthClass::L: return {0.30, 0.45};
        case LengthClass::XL: return {0.45, 0.60};
        case LengthClass::XXL: return {0.60, 0.80};
    }
    return {0.18, 0.30};
}

StyleParams StyleParams::random(StyleClass style, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    StyleParams p;
    p.style = style;
    const auto band = length_band(style.length);
    p.length = lerp(band.lo, band.hi, 0.25 + 0.6 * u(rng));
    p.length_spread = lerp(0.05, 0.25, u(rng));
    const double part = u(rng);
    p.part_x = part < 0.34 ? 0.0 : (part < 0.67 ? -1.0 : 1.0) * lerp(0.01, 0.04, u(rng));
    p.part_strength = lerp(0.4, 1.2, u(rng));
    p.sweep = lerp(-0.6, 0.6, u(rng));
    p.bangs = lerp(0.0, 0.8, u(rng));
    p.back_drift = lerp(0.1, 0.5, u(rng));
    p.lift = lerp(0.1, 0.4, u(rng));
    p.gravity = lerp(20.0, 45.0, u(rng));
    if (style.curly) {
        p.curl_amplitude = lerp(0.004, 0.008, u(rng));
        p.curl_period = lerp(0.04, 0.07, u(rng));
    }
    p.jitter_seed = rng();
    return p;
}

StyleParams StyleParams::symmetric(StyleClass style) {
    StyleParams p;
    p.style = style;
    const auto band = length_band(style.length);
    p.length = 0.5 * (band.lo + band.hi);
    if (style.curly) p.curl_amplitude = 0.006;
    p.jitter_seed = 7;
    return p;
}

HairModel grow_style(const StyleParams& params, const GeneratorOptions& opts) {
    const int res = opts.scalp_res;
    const int m = opts.samples;
    const Ellipsoid& head = opts.body.head();
    HairModel model;
    model.grid = make_scalp_grid(res, res, head, opts.scalp);
    model.strands.resize(model.grid.size());
    model.class_tags = {params.style};

    const Vec3 down{0.0, -1.0, 0.0};
    const double omega = 2.0 * std::numbers::pi / params.curl_period;

    parallel_for(model.strands.size(), [&](std::size_t i) {
        const int r = static_cast<int>(i) / res;
        const int c = static_cast<int>(i) % res;
        // Mirror cells share their jitter so symmetric parameters give symmetric models.
        const std::uint64_t h = derive_seed(params.jitter_seed, static_cast<std::uint64_t>(r) * res + std::min(c, res - 1 - c));
        const double u1 = unit_from_hash(h);
        const double u2 = unit_from_hash(mix_seed(h));
        const double target = params.length * (1.0 - params.length_spread * u1);

        const Vec3 root(model.grid.roots[i]);
        const Vec3 n(model.grid.normals[i]);

        const double front = std::clamp((root.z - 0.3 * head.semi_axes.z) / (0.7 * head.semi_axes.z), 0.0, 1.0);
        const double side = std::tanh((root.x - params.part_x) / 0.01) * params.part_strength * std::max(0.0, n.y);
        const Vec3 drift{params.sweep, 0.0, params.bangs * front - params.back_drift * (1.0 - front)};
        Vec3 flow = down + Vec3{side, 0.0, 0.0} + drift;
        flow -= n * dot(flow, n);
        if (norm(flow) < 1e-9) flow = Vec3{0.0, 0.0, -1.0} - n * n.z;
        Vec3 dir = normalized(n * params.lift + normalized(flow));
        const Vec3 pull = normalized(down + drift * 0.5);

        // Centreline, grown long enough to absorb the curl and the final cut.
        const double grow_length = target * (params.curl_amplitude > 0.0 ? 1.8 : 1.15) + 0.02;
        const int steps = static_cast<int>(std::ceil(grow_length / kGrowStep));
        Polyline line{root};
        Vec3 p = root;
        for (int k = 0; k < steps; ++k) {
            dir = normalized(dir + (pull - dir * dot(pull, dir)) * (kGrowStep * params.gravity));
            const Vec3 next = slide_outside(p + dir * kGrowStep, opts.body, kSlideMargin);
            const Vec3 step = next - p;
            if (norm(step) > 1e-12) dir = normalized(step);
            p = next;
            line.push_back(p);
        }

        if (params.curl_amplitude > 0.0) {
            std::vector<Vec3> nrm, bin;
            transport_frames(line, nrm, bin);
            const double phase = 2.0 * std::numbers::pi * u2;
            double s = 0.0;
            Polyline curly(line.size());
            for (std::size_t k = 0; k < line.size(); ++k) {
                if (k > 0) s += norm(line[k] - line[k - 1]);
                const double amp = params.curl_amplitude * std::min(1.0, s / 0.03);
                curly[k] = line[k] + (nrm[k] * std::sin(omega * s + phase) + bin[k] * std::cos(omega * s + phase)) * amp;
            }
            line = std::move(curly);
        }

        // Cut so that the resampled strand has the target arc length.
        auto resampled_length = [&](double cut) { return arc_length(resample(cut_polyline(line, cut), m)); };
        const double full = arc_length(line);
        double lo = 0.0, hi = full;
        Polyline best;
        if (resampled_length(full) <= target) {
            best = resample(line, m);
        } else {
            for (int it = 0; it < 40; ++it) {
                const double mid = 0.5 * (lo + hi);
                (resampled_length(mid) < target ? lo : hi) = mid;
            }
            best = resample(cut_polyline(line, hi), m);
        }
        for (auto& q : best) q -= root;
        assign_strand(model.strands[i], best);
    });
    return resolve_collisions(model, opts.body);
}

HairModel procedural_style(StyleClass style, std::uint64_t seed, const GeneratorOptions& opts) {
    return grow_style(StyleParams::random(style, seed), opts);
}

HairModel mirror(const HairModel& model) {
    model.validate();
    const int rows = model.grid.rows, cols = model.grid.cols;
    HairModel out = model;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int dst = model.grid.index(r, c);
            const int src = model.grid.index(r, cols - 1 - c);
            auto flip = [](Vec3f v) { return Vec3f{-v.x, v.y, v.z}; };
            out.grid.roots[dst] = flip(model.grid.roots[src]);
            out.grid.normals[dst] = flip(model.grid.normals[src]);
            out.strands[dst] = model.strands[src];
            for (auto& s : out.strands[dst].samples) s = flip(s);
        }
    }
    return out;
}

HairModel resolve_collisions(const HairModel& model, const EllipsoidSet& body, CollisionReport* report) {
    HairModel out = model;
    CollisionReport rep;
    for (std::size_t i = 0; i < out.strands.size(); ++i) {
        auto& strand = out.strands[i];
        const Vec3 root(out.grid.roots[i]);
        std::vector<Vec3> world(strand.samples.size());
        for (std::size_t j = 0; j < world.size(); ++j) world[j] = root + Vec3(strand.samples[j]);

        bool moved_any = false;
        for (int pass = 0; pass < kMaxResolvePasses; ++pass) {
            bool moved = false;
            for (std::size_t j = 1; j < world.size(); ++j) {
                for (const auto& e : body.items) {
                    Vec3& p = world[j];
                    if (e.dist(p) <= 0.0) continue;
                    Vec3 g = e.outward_gradient(p);
                    if (norm(g) < 1e-12) g = {0.0, 1.0, 0.0};
                    g = normalized(g);
                    // Solve F(p + t g) = 1 + target for the positive root.
                    const Vec3 d = p - e.center;
                    const Vec3& ax = e.semi_axes;
                    const double qa = g.x * g.x / (ax.x * ax.x) + g.y * g.y / (ax.y * ax.y) + g.z * g.z / (ax.z * ax.z);
                    const double qb = 2.0 * (d.x * g.x / (ax.x * ax.x) + d.y * g.y / (ax.y * ax.y) + d.z * g.z / (ax.z * ax.z));
                    const double qc = (1.0 - e.dist(p)) - (1.0 + kResolveTarget);
                    const double t = (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
                    p += g * t;
                    moved = true;
                    ++rep.moved_samples;
                }
            }
            if (!moved) break;
            moved_any = true;
            rep.passes = std::max(rep.passes, pass + 1);
            if (pass + 1 == kMaxResolvePasses) rep.converged = false;
        }
        if (!moved_any) continue;

        Polyline local(world.size());
        for (std::size_t j = 0; j < world.size(); ++j) local[j] = world[j] - root;
        assign_strand(strand, local);
        // Float rounding can leave a sample a hair's breadth inside; re-check in float space.
        for (std::size_t j = 1; j < strand.samples.size(); ++j) {
            const Vec3 p = root + Vec3(strand.samples[j]);
            for (const auto& e : body.items) {
                if (e.dist(p) > 0.0) rep.converged = false;
            }
        }
    }
    if (report) *report = rep;
    return out;
}

Clustering cluster_central_strands(const HairModel& model, int k, std::uint64_t seed) {
    const int n = model.strand_count();
    const int m = model.samples_per_strand();
    if (k < 1) throw std::invalid_argument("cluster count must be positive");
    if (n < k) throw std::invalid_argument("fewer strands than clusters");
    const std::size_t dim = static_cast<std::size_t>(m) * 3;

    std::vector<double> x(static_cast<std::size_t>(n) * dim);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            for (int a = 0; a < 3; ++a) x[i * dim + j * 3 + a] = model.strands[i].samples[j][a];
        }
    }
    auto dist2 = [&](const double* a, const double* b) {
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
        return s;
    };

    // k-means++ seeding.
    std::mt19937_64 rng(seed);
    std::vector<double> centers(static_cast<std::size_t>(k) * dim);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::copy_n(&x[pick(rng) * dim], dim, centers.begin());
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], dist2(&x[i * dim], &centers[(c - 1) * dim]));
            total += nearest[i];
        }
        int chosen = 0;
        if (total > 0.0) {
            const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            double acc = 0.0;
            chosen = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += nearest[i];
                if (acc > target) {
                    chosen = i;
                    break;
                }
            }
        }
        std::copy_n(&x[chosen * dim], dim, centers.begin() + static_cast<std::ptrdiff_t>(c * dim));
    }

    Clustering out;
    out.labels.assign(n, -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        double objective = 0.0;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = dist2(&x[i * dim], &centers[c * dim]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (out.labels[i] != best) changed = true;
            out.labels[i] = best;
            objective += best_d;
        }
        out.objective.push_back(objective);
        out.iterations = iter + 1;
        if (!changed) break;
        std::vector<double> sum(centers.size(), 0.0);
        std::vector<int> count(k, 0);
        for (int i = 0; i < n; ++i) {
            const int c = out.labels[i];
            ++count[c];
            for (std::size_t d = 0; d < dim; ++d) sum[c * dim + d] += x[i * dim + d];
        }
        for (int c = 0; c < k; ++c) {
            if (count[c] == 0) continue;  // empty cluster keeps its centre
            for (std::size_t d = 0; d < dim; ++d) centers[c * dim + d] = sum[c * dim + d] / count[c];
        }
    }

    out.centrals.resize(k);
    for (int c = 0; c < k; ++c) {
        out.centrals[c].resize(m);
        for (int j = 0; j < m; ++j) {
            const double* v = &centers[c * dim + j * 3];
            out.centrals[c][j] = {v[0], v[1], v[2]};
        }
    }
    return out;
}

std::vector<int> match_clusters(const Clustering& a, const Clustering& b) {
    const int k = static_cast<int>(a.centrals.size());
    std::vector<std::vector<double>> cost(k, std::vector<double>(k, 0.0));
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            for (std::size_t s = 0; s < a.centrals[i].size(); ++s) {
                const Vec3 d = a.centrals[i][s] - b.centrals[j][s];
                cost[i][j] += dot(d, d);
            }
        }
    }
    std::vector<int> perm(k);
    for (int i = 0; i < k; ++i) perm[i] = i;
    std::vector<int> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (int i = 0; i < k; ++i) c += cost[i][perm[i]];
        if (c < best_cost) {
            best_cost = c;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

HairModel blend(const HairModel& a, const HairModel& b, unsigned selection, std::uint64_t seed, const EllipsoidSet& body) {
    constexpr int k = 5;
    if (selection == 0 || selection >= (1u << k) - 1) throw std::invalid_argument("not a new combination");
    if (!(a.grid == b.grid) || a.samples_per_strand() != b.samples_per_strand()) {
        throw std::invalid_argument("blend parents must share the scalp grid and sample count");
    }
    std::vector<StyleClass> shared;
    for (const auto& t : a.class_tags) {
        if (std::find(b.class_tags.begin(), b.class_tags.end(), t) != b.class_tags.end()) shared.push_back(t);
    }
    if (!a.class_tags.empty() && !b.class_tags.empty() && shared.empty()) {
        throw std::invalid_argument("blend parents do not share a style class");
    }

    const Clustering ca = cluster_central_strands(a, k, seed);
    const Clustering cb = cluster_central_strands(b, k, seed);
    const auto perm = match_clusters(ca, cb);
    std::vector<Polyline> central_b(k), blended(k);
    for (int c = 0; c < k; ++c) {
        central_b[c] = cb.centrals[perm[c]];
        blended[c] = (selection >> c) & 1u ? central_b[c] : ca.centrals[c];
    }

    HairModel out = a;
    out.class_tags = shared.empty() ? a.class_tags : shared;
    const int m = a.samples_per_strand();
    parallel_for(out.strands.size(), [&](std::size_t i) {
        const bool from_b = (selection >> ca.labels[i]) & 1u;
        const HairModel& parent = from_b ? b : a;
        const auto& centrals = from_b ? central_b : ca.centrals;
        const Polyline strand = strand_polyline(parent.strands[i]);

        std::array<double, k> w{};
        int exact = -1;
        for (int c = 0; c < k; ++c) {
            double d2 = 0.0;
            for (int j = 0; j < m; ++j) {
                const Vec3 d = strand[j] - centrals[c][j];
                d2 += dot(d, d);
            }
            if (d2 < 1e-24) exact = c;
            w[c] = 1.0 / d2;
        }
        if (exact >= 0) {
            w.fill(0.0);
            w[exact] = 1.0;
        }
        double wsum = 0.0;
        for (double v : w) wsum += v;

        Polyline warped = strand;
        for (int j = 0; j < m; ++j) {
            Vec3 offset;
            for (int c = 0; c < k; ++c) offset += (blended[c][j] - centrals[c][j]) * (w[c] / wsum);
            warped[j] += offset;
        }
        out.strands[i] = parent.strands[i];
        assign_strand(out.strands[i], warped);
    });
    return resolve_collisions(out, body);
}

// ---- dataset --------------------------------------------------------------------------------

const std::set<std::string>& DatasetConfig::keys() {
    static const std::set<std::string> k = {
        "base_styles", "classes",     "mirror",      "blends_per_pair", "max_blend_models", "views",
        "noise_sigma", "translation_frac", "yaw_range", "pitch_range",   "roll_range",       "extent",
        "input_res",   "scalp_res",   "samples",     "seed",            "profile"};
    return k;
}

DatasetConfig DatasetConfig::from_config(const KeyValueConfig& cfg) {
    cfg.require_known(keys());
    DatasetConfig c;
    if (cfg.has("profile")) {
        const std::string p = cfg.get_string("profile", "full");
        if (p == "desk") {
            c.input_res = 64;
            c.scalp_res = 8;
            c.samples = 16;
        } else if (p == "tiny") {
            c.input_res = 32;
            c.scalp_res = 4;
            c.samples = 4;
        } else if (p != "full") {
            throw ConfigError("unknown profile: " + p);
        }
    }
    c.base_styles = static_cast<int>(cfg.get_int("base_styles", c.base_styles));
    c.mirror = cfg.get_bool("mirror", c.mirror);
    c.blends_per_pair = static_cast<int>(cfg.get_int("blends_per_pair", c.blends_per_pair));
    c.max_blend_models = static_cast<int>(cfg.get_int("max_blend_models", c.max_blend_models));
    c.views = static_cast<int>(cfg.get_int("views", c.views));
    c.noise_sigma = cfg.get_double("noise_sigma", c.noise_sigma);
    c.translation_frac = cfg.get_double("translation_frac", c.translation_frac);
    c.yaw_range = cfg.get_double("yaw_range", c.yaw_range);
    c.pitch_range = cfg.get_double("pitch_range", c.pitch_range);
    c.roll_range = cfg.get_double("roll_range", c.roll_range);
    c.extent = cfg.get_double("extent", c.extent);
    c.input_res = static_cast<int>(cfg.get_int("input_res", c.input_res));
    c.scalp_res = static_cast<int>(cfg.get_int("scalp_res", c.scalp_res));
    c.samples = static_cast<int>(cfg.get_int("samples", c.samples));
    c.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(c.seed)));
    if (cfg.has("classes")) {
        c.classes.clear();
        std::stringstream ss(cfg.get_string("classes", ""));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item.erase(0, item.find_first_not_of(" \t"));
            item.erase(item.find_last_not_of(" \t") + 1);
            if (!item.empty()) c.classes.push_back(StyleClass::parse(item));
        }
    }
    if (c.base_styles < 1) throw ConfigError("base_styles must be >= 1");
    if (c.views < 1) throw ConfigError("views must be >= 1");
    if (c.blends_per_pair < 0 || c.blends_per_pair > 30) throw ConfigError("blends_per_pair must be in [0, 30]");
    if (c.classes.empty()) throw ConfigError("classes must not be empty");
    if (c.noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    if (c.extent <= 0.0) throw ConfigError("extent must be positive");
    if (c.yaw_range < 0.0 || c.yaw_range > 90.0) throw ConfigError("yaw_range must be in [0, 90]");
    return c;
}

namespace {

std::string model_id(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "m%05zu", index);
    return buf;
}

}  // namespace

std::vector<std::pair<std::string, HairModel>> dataset_models(const DatasetConfig& config, DatasetSummary* summary) {
    GeneratorOptions gen;
    gen.scalp_res = config.scalp_res;
    gen.samples = config.samples;

    std::vector<HairModel> sources(config.base_styles);
    parallel_for(sources.size(), [&](std::size_t b) {
        const StyleClass cls = config.classes[b % config.classes.size()];
        sources[b] = procedural_style(cls, derive_seed(config.seed, b), gen);
    });
    if (config.mirror) {
        for (int b = 0; b < config.base_styles; ++b) sources.push_back(mirror(sources[b]));
    }

    struct BlendJob {
        std::size_t a, b;
        unsigned selection;
        std::uint64_t seed;
    };
    std::vector<BlendJob> jobs;
    if (config.blends_per_pair > 0) {
        std::size_t pair_index = 0;
        bool full = false;
        for (std::size_t a = 0; a < sources.size() && !full; ++a) {
            for (std::size_t b = a + 1; b < sources.size() && !full; ++b) {
                if (!(sources[a].class_tags.front() == sources[b].class_tags.front())) continue;
                std::mt19937_64 rng(derive_seed(config.seed, 0x9b1e0000ull + pair_index++));
                std::vector<unsigned> selections;
                for (unsigned s = 1; s < 31; ++s) selections.push_back(s);
                std::shuffle(selections.begin(), selections.end(), rng);
                for (int k = 0; k < config.blends_per_pair; ++k) {
                    if (config.max_blend_models > 0 && static_cast<int>(jobs.size()) >= config.max_blend_models) {
                        full = true;
                        break;
                    }
                    jobs.push_back({a, b, selections[k], rng()});
                }
            }
        }
    }
    std::vector<HairModel> blends(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t j) {
        const auto& job = jobs[j];
        blends[j] = blend(sources[job.a], sources[job.b], job.selection, job.seed, gen.body);
    });

    std::vector<std::pair<std::string, HairModel>> out;
    for (auto& m : sources) out.emplace_back(model_id(out.size()), std::move(m));
    for (auto& m : blends) out.emplace_back(model_id(out.size()), std::move(m));
    if (summary) {
        summary->models = static_cast<int>(out.size());
        for (const auto& [id, m] : out) {
            if (collision_value(m, gen.body) > 1e-8) ++summary->collision_warnings;
        }
    }
    return out;
}

DatasetSummary build_dataset(const DatasetConfig& config, const std::filesystem::path& out) {
    DatasetSummary summary;
    const auto models = dataset_models(config, &summary);
    const EllipsoidSet body = EllipsoidSet::default_body();
    std::filesystem::create_directories(out);

    std::vector<std::string> lines(models.size() * config.views);
    std::vector<std::uint8_t> empty(lines.size(), 0);
    parallel_for(lines.size(), [&](std::size_t k) {
        const std::size_t mi = k / config.views;
        const int view = static_cast<int>(k % config.views);
        const auto& [id, model] = models[mi];
        const std::uint64_t view_seed = derive_seed(config.seed, 0x71e30000ull + k);
        std::mt19937_64 rng(view_seed);
        auto sym = [&](double range) { return std::uniform_real_distribution<double>(-range, range)(rng); };

        Camera cam;
        cam.width = cam.height = config.input_res;
        cam.scale = config.extent / config.input_res;
        cam.yaw_deg = sym(config.yaw_range);
        cam.pitch_deg = sym(config.pitch_range);
        cam.roll_deg = sym(config.roll_range);
        const double shift = config.translation_frac * config.extent;
        cam.translation = {sym(shift), 0.15 * config.extent + sym(shift), 0.0};

        const auto render = render_orientation(model, body, cam, config.noise_sigma, derive_seed(view_seed, 1));
        empty[k] = render.no_hair ? 1 : 0;
        const auto dir = out / id;
        std::filesystem::create_directories(dir);
        const std::string stem = "view" + std::to_string(view);
        save_orientation(render.image, dir / (stem + ".ornt"));
        save_hair(transformed(model, cam.pose()), dir / (stem + ".hair"));
        save_visibility(render.visible, dir / (stem + ".vis"));

        char buf[320];
        std::snprintf(buf, sizeof buf, "%s %d %.17g %.17g %.17g %.17g %.17g %.17g %llu", id.c_str(), view, cam.yaw_deg,
                      cam.pitch_deg, cam.roll_deg, cam.translation.x, cam.translation.y, cam.translation.z,
                      static_cast<unsigned long long>(view_seed));
        lines[k] = buf;
    });

    std::ofstream index(out / "index.txt", std::ios::binary | std::ios::trunc);
    if (!index) throw FormatError(FormatError::Kind::Io, "cannot write " + (out / "index.txt").string());
    char header[256];
    std::snprintf(header, sizeof header, "# hairnet-corpus input_res=%d scalp_res=%d samples=%d extent=%.17g noise_sigma=%.17g\n",
                  config.input_res, config.scalp_res, config.samples, config.extent, config.noise_sigma);
    index << header;
    for (const auto& l : lines) index << l << '\n';
    if (!index) throw FormatError(FormatError::Kind::Io, "cannot write " + (out / "index.txt").string());

    summary.pairs = static_cast<int>(lines.size());
    for (auto e : empty) summary.empty_views += e;
    return summary;
}

}  // namespace hairnet
