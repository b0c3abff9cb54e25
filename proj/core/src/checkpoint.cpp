#include <set>

#include "hairnet/binary_io.hpp"
#include "hairnet/errors.hpp"
#include "hairnet/model.hpp"

namespace hairnet {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void write_tensor(io::ByteWriter& w, const std::string& name, const nn::Tensor<float>& t) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    w.f32s(t.data);
}

nn::Tensor<float> scalar_tensor(double v) { return nn::Tensor<float>({1}, {static_cast<float>(v)}); }

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
    const auto& p = ckpt.params;
    io::ByteWriter w;
    w.magic("HNET");
    w.u32(kCheckpointVersion);
    for (int v : {p.profile.input_res, p.profile.scalp_res, p.profile.samples, p.profile.channel_divisor,
                  p.profile.feature_dim}) {
        w.u32(static_cast<std::uint32_t>(v));
    }
    std::uint32_t count = static_cast<std::uint32_t>(p.tensors.size()) + 2;
    if (ckpt.adam) count += 2 * static_cast<std::uint32_t>(p.tensors.size());
    w.u32(count);
    for (std::size_t i = 0; i < p.tensors.size(); ++i) write_tensor(w, p.names[i], p.tensors[i]);
    if (ckpt.adam) {
        for (std::size_t i = 0; i < p.tensors.size(); ++i) {
            write_tensor(w, p.names[i] + ".m", ckpt.adam->m[i]);
            write_tensor(w, p.names[i] + ".v", ckpt.adam->v[i]);
        }
    }
    write_tensor(w, "state.epoch", scalar_tensor(static_cast<double>(ckpt.epoch)));
    write_tensor(w, "state.step", scalar_tensor(static_cast<double>(ckpt.step)));
    return w.buffer();
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    io::ByteWriter w;
    w.bytes(encode_checkpoint(ckpt));
    w.save(path);
}

Checkpoint decode_checkpoint(std::vector<std::uint8_t> bytes, const std::string& label) {
    io::ByteReader r(std::move(bytes), label);
    r.expect_magic("HNET");
    if (r.u32() != kCheckpointVersion) throw FormatError(FormatError::Kind::VersionMismatch, "version mismatch: " + label);
    Checkpoint ckpt;
    auto& prof = ckpt.params.profile;
    prof.input_res = static_cast<int>(r.u32());
    prof.scalp_res = static_cast<int>(r.u32());
    prof.samples = static_cast<int>(r.u32());
    prof.channel_divisor = static_cast<int>(r.u32());
    prof.feature_dim = static_cast<int>(r.u32());
    try {
        prof.validate();
    } catch (const ConfigError& e) {
        throw FormatError(FormatError::Kind::Invalid, std::string("checkpoint profile: ") + e.what());
    }

    // Expected parameter names and shapes for this profile.
    const auto reference = init_params<float>(prof, 0);
    const std::size_t nparams = reference.tensors.size();
    const auto count = r.u32();

    std::vector<std::pair<std::string, nn::Tensor<float>>> entries;
    for (std::uint32_t k = 0; k < count; ++k) {
        auto name = r.str();
        const auto rank = r.u32();
        if (rank > 8) throw FormatError(FormatError::Kind::Invalid, "implausible tensor rank in " + label);
        nn::Shape shape(rank);
        unsigned long long n = 1;
        for (auto& d : shape) {
            d = static_cast<int>(r.u32());
            n *= static_cast<unsigned long long>(d);
        }
        if (n * 4 > r.remaining()) throw FormatError(FormatError::Kind::Truncation, "truncation: " + label);
        nn::Tensor<float> t(shape);
        r.f32s(t.data);
        entries.emplace_back(std::move(name), std::move(t));
    }
    r.expect_end();

    auto find = [&](const std::string& name) -> nn::Tensor<float>* {
        for (auto& [n, t] : entries) {
            if (n == name) return &t;
        }
        return nullptr;
    };

    ckpt.params.names = reference.names;
    bool has_moments = true;
    for (std::size_t i = 0; i < nparams; ++i) {
        auto* t = find(reference.names[i]);
        if (!t) throw FormatError(FormatError::Kind::Invalid, "checkpoint is missing " + reference.names[i]);
        if (t->shape != reference.tensors[i].shape) {
            throw FormatError(FormatError::Kind::Invalid, "checkpoint tensor " + reference.names[i] + " has shape " +
                                                              nn::shape_string(t->shape));
        }
        ckpt.params.tensors.push_back(std::move(*t));
        has_moments = has_moments && find(reference.names[i] + ".m") && find(reference.names[i] + ".v");
    }
    if (has_moments) {
        nn::AdamState<float> adam;
        for (std::size_t i = 0; i < nparams; ++i) {
            auto* m = find(reference.names[i] + ".m");
            auto* v = find(reference.names[i] + ".v");
            if (m->shape != reference.tensors[i].shape || v->shape != reference.tensors[i].shape) {
                throw FormatError(FormatError::Kind::Invalid, "moment shape mismatch for " + reference.names[i]);
            }
            adam.m.push_back(std::move(*m));
            adam.v.push_back(std::move(*v));
        }
        ckpt.adam = std::move(adam);
    }
    if (auto* e = find("state.epoch"); e && e->size() == 1) ckpt.epoch = static_cast<std::int64_t>(e->data[0]);
    if (auto* s = find("state.step"); s && s->size() == 1) ckpt.step = static_cast<std::int64_t>(s->data[0]);
    if (ckpt.adam) ckpt.adam->step = ckpt.step;
    return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(io::read_file(path), path.string());
}

Checkpoint load_checkpoint_for_resume(const std::filesystem::path& path, const ScaleProfile& expected) {
    auto ckpt = load_checkpoint(path);
    if (!(ckpt.params.profile == expected)) {
        throw FormatError(FormatError::Kind::Invalid, "profile mismatch: checkpoint " + path.string() +
                                                          " was trained with a different scale profile");
    }
    if (!ckpt.adam) throw FormatError(FormatError::Kind::Invalid, "checkpoint has no optimizer state to resume from");
    return ckpt;
}

}  // namespace hairnet
