#include "hairnet/hair.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "hairnet/binary_io.hpp"
#include "hairnet/errors.hpp"

namespace hairnet {

namespace {

constexpr std::uint32_t kHairVersion = 1;

const char* length_name(LengthClass l) {
    switch (l) {
        case LengthClass::XS: return "XS";
        case LengthClass::S: return "S";
        case LengthClass::M: return "M";
        case LengthClass::L: return "L";
        case LengthClass::XL: return "XL";
        case LengthClass::XXL: return "XXL";
    }
    return "?";
}

}  // namespace

std::string StyleClass::name() const { return std::string(length_name(length)) + (curly ? "_c" : "_s"); }

StyleClass StyleClass::parse(const std::string& name) {
    for (const auto& c : all()) {
        if (c.name() == name) return c;
    }
    throw std::invalid_argument("unknown style class: " + name);
}

std::vector<StyleClass> StyleClass::all() {
    std::vector<StyleClass> out;
    for (bool curly : {false, true}) {
        for (auto l : {LengthClass::XS, LengthClass::S, LengthClass::M, LengthClass::L, LengthClass::XL,
                       LengthClass::XXL}) {
            out.push_back({l, curly});
        }
    }
    return out;
}

void HairModel::validate() const {
    if (static_cast<int>(strands.size()) != grid.size()) {
        throw std::invalid_argument("strand count does not match scalp grid");
    }
    if (grid.roots.size() != strands.size() || grid.normals.size() != strands.size()) {
        throw std::invalid_argument("scalp grid root/normal count mismatch");
    }
    const auto m = samples_per_strand();
    for (const auto& s : strands) {
        if (static_cast<int>(s.samples.size()) != m || static_cast<int>(s.curvatures.size()) != m) {
            throw std::invalid_argument("strand sample count mismatch");
        }
        if (m > 0 && !(s.samples[0] == Vec3f{})) throw std::invalid_argument("strand root is not at the origin");
        for (float c : s.curvatures) {
            if (!std::isfinite(c) || c < 0.0f) throw std::invalid_argument("curvature must be finite and >= 0");
        }
        for (const auto& p : s.samples) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
                throw std::invalid_argument("non-finite strand sample");
            }
        }
    }
}

bool geometry_equal(const HairModel& a, const HairModel& b) { return a.grid == b.grid && a.strands == b.strands; }

std::vector<Vec3> to_world(const HairModel& model) {
    const auto m = static_cast<std::size_t>(model.samples_per_strand());
    std::vector<Vec3> out;
    out.reserve(model.strands.size() * m);
    for (std::size_t i = 0; i < model.strands.size(); ++i) {
        const Vec3 root(model.grid.roots[i]);
        for (const auto& s : model.strands[i].samples) out.push_back(root + Vec3(s));
    }
    return out;
}

HairModel to_local(std::span<const Vec3> world, const HairModel& reference) {
    HairModel out = reference;
    const auto m = static_cast<std::size_t>(reference.samples_per_strand());
    if (world.size() != reference.strands.size() * m) throw std::invalid_argument("to_local: point count mismatch");
    for (std::size_t i = 0; i < out.strands.size(); ++i) {
        const Vec3 root(reference.grid.roots[i]);
        for (std::size_t j = 0; j < m; ++j) out.strands[i].samples[j] = Vec3f(world[i * m + j] - root);
    }
    return out;
}

Polyline strand_polyline(const Strand& strand) {
    Polyline p;
    p.reserve(strand.samples.size());
    for (const auto& s : strand.samples) p.emplace_back(s);
    return p;
}

std::vector<double> discrete_curvature(std::span<const Vec3> p) {
    const std::size_t n = p.size();
    std::vector<double> k(n, 0.0);
    if (n < 3) return k;
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const Vec3 e1 = p[j] - p[j - 1];
        const Vec3 e2 = p[j + 1] - p[j];
        const Vec3 e3 = p[j + 1] - p[j - 1];
        const double denom = norm(e1) * norm(e2) * norm(e3);
        // 4 * area / (|e1||e2||e3|) with |e1 x e3| = 2 * area.
        k[j] = denom > 0.0 ? 2.0 * norm(cross(e1, e3)) / denom : 0.0;
    }
    k[0] = k[1];
    k[n - 1] = k[n - 2];
    return k;
}

double arc_length(std::span<const Vec3> p) {
    double len = 0.0;
    for (std::size_t j = 1; j < p.size(); ++j) len += norm(p[j] - p[j - 1]);
    return len;
}

Polyline resample(std::span<const Vec3> poly, int count) {
    if (count < 2) throw std::invalid_argument("resample needs at least 2 output samples");
    if (poly.size() < 2) throw std::invalid_argument("degenerate strand");
    std::vector<double> cum(poly.size(), 0.0);
    for (std::size_t j = 1; j < poly.size(); ++j) cum[j] = cum[j - 1] + norm(poly[j] - poly[j - 1]);
    const double total = cum.back();
    if (!(total > 0.0)) throw std::invalid_argument("degenerate strand");

    Polyline out(static_cast<std::size_t>(count));
    out.front() = poly.front();
    out.back() = poly.back();
    std::size_t seg = 1;
    for (int k = 1; k + 1 < count; ++k) {
        const double target = total * k / (count - 1);
        while (seg + 1 < poly.size() && cum[seg] < target) ++seg;
        const double len = cum[seg] - cum[seg - 1];
        const double t = len > 0.0 ? (target - cum[seg - 1]) / len : 0.0;
        out[static_cast<std::size_t>(k)] = poly[seg - 1] + (poly[seg] - poly[seg - 1]) * t;
    }
    return out;
}

void assign_strand(Strand& strand, std::span<const Vec3> local) {
    strand.samples.resize(local.size());
    for (std::size_t j = 0; j < local.size(); ++j) strand.samples[j] = Vec3f(local[j]);
    if (!strand.samples.empty()) strand.samples[0] = Vec3f{};
    const auto k = discrete_curvature(strand_polyline(strand));
    strand.curvatures.resize(k.size());
    for (std::size_t j = 0; j < k.size(); ++j) strand.curvatures[j] = static_cast<float>(k[j]);
}

void recompute_curvatures(HairModel& model) {
    for (auto& s : model.strands) {
        const auto k = discrete_curvature(strand_polyline(s));
        for (std::size_t j = 0; j < k.size(); ++j) s.curvatures[j] = static_cast<float>(k[j]);
    }
}

HairModel transformed(const HairModel& model, const Pose& pose) {
    HairModel out = model;
    for (std::size_t i = 0; i < out.strands.size(); ++i) {
        out.grid.roots[i] = Vec3f(pose.apply(Vec3(model.grid.roots[i])));
        out.grid.normals[i] = Vec3f(pose.rotate(Vec3(model.grid.normals[i])));
        auto& samples = out.strands[i].samples;
        for (std::size_t j = 0; j < samples.size(); ++j) {
            samples[j] = j == 0 ? Vec3f{} : Vec3f(pose.rotate(Vec3(model.strands[i].samples[j])));
        }
    }
    return out;
}

std::vector<std::uint8_t> encode_hair(const HairModel& model) {
    const auto n = static_cast<std::uint32_t>(model.strands.size());
    const auto m = static_cast<std::uint32_t>(model.samples_per_strand());
    io::ByteWriter w;
    w.magic("HAIR");
    w.u32(kHairVersion);
    w.u32(n);
    w.u32(m);
    for (const auto& s : model.strands) {
        if (s.samples.size() != m || s.curvatures.size() != m) {
            throw FormatError(FormatError::Kind::Invalid, "ragged hair model");
        }
        for (const auto& p : s.samples) {
            w.f32(p.x);
            w.f32(p.y);
            w.f32(p.z);
        }
    }
    for (const auto& s : model.strands) w.f32s(s.curvatures);
    for (const auto& r : model.grid.roots) {
        w.f32(r.x);
        w.f32(r.y);
        w.f32(r.z);
    }
    for (const auto& nrm : model.grid.normals) {
        w.f32(nrm.x);
        w.f32(nrm.y);
        w.f32(nrm.z);
    }
    return w.buffer();
}

HairModel decode_hair(std::vector<std::uint8_t> bytes, const std::string& label) {
    io::ByteReader r(std::move(bytes), label);
    r.expect_magic("HAIR");
    if (r.u32() != kHairVersion) throw FormatError(FormatError::Kind::VersionMismatch, "version mismatch: " + label);
    const auto n = r.u32();
    const auto m = r.u32();
    // Guard against absurd headers before allocating.
    const unsigned long long need = 16ull * n * m + 24ull * n;
    if (need > r.remaining()) throw FormatError(FormatError::Kind::Truncation, "truncation: " + label);

    HairModel model;
    model.strands.resize(n);
    for (auto& s : model.strands) {
        s.samples.resize(m);
        for (auto& p : s.samples) {
            p.x = r.f32();
            p.y = r.f32();
            p.z = r.f32();
        }
    }
    for (auto& s : model.strands) {
        s.curvatures.resize(m);
        r.f32s(s.curvatures);
    }
    const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (side * side == static_cast<int>(n)) {
        model.grid.rows = model.grid.cols = side;
    } else {
        model.grid.rows = 1;
        model.grid.cols = static_cast<int>(n);
    }
    model.grid.roots.resize(n);
    model.grid.normals.resize(n);
    for (auto& p : model.grid.roots) {
        p.x = r.f32();
        p.y = r.f32();
        p.z = r.f32();
    }
    for (auto& p : model.grid.normals) {
        p.x = r.f32();
        p.y = r.f32();
        p.z = r.f32();
    }
    r.expect_end();
    return model;
}

void save_hair(const HairModel& model, const std::filesystem::path& path) {
    io::ByteWriter w;
    w.bytes(encode_hair(model));
    w.save(path);
}

HairModel load_hair(const std::filesystem::path& path) { return decode_hair(io::read_file(path), path.string()); }

void write_obj(const HairModel& model, const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw FormatError(FormatError::Kind::Io, "cannot open for writing: " + path.string());
    const auto world = to_world(model);
    std::fprintf(f, "# %d strands, %d samples each\n", model.strand_count(), model.samples_per_strand());
    for (const auto& p : world) std::fprintf(f, "v %.7g %.7g %.7g\n", p.x, p.y, p.z);
    const auto m = static_cast<std::size_t>(model.samples_per_strand());
    for (std::size_t i = 0; i < model.strands.size(); ++i) {
        std::fputc('l', f);
        for (std::size_t j = 0; j < m; ++j) std::fprintf(f, " %zu", i * m + j + 1);
        std::fputc('\n', f);
    }
    const bool ok = std::ferror(f) == 0;
    std::fclose(f);
    if (!ok) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
}

}  // namespace hairnet
