#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hairnet/geometry.hpp"
#include "hairnet/hair.hpp"
#include "hairnet/orientation.hpp"

namespace hairnet {

struct CorpusEntry {
    std::string model_id;
    int view = 0;
    double yaw = 0.0, pitch = 0.0, roll = 0.0;
    Vec3 translation;
    std::uint64_t seed = 0;

    Pose pose() const { return Pose::from_euler_degrees(yaw, pitch, roll, translation); }
};

struct CorpusIndex {
    std::filesystem::path root;
    int input_res = 0;
    int scalp_res = 0;
    int samples = 0;
    double extent = 0.0;
    std::vector<CorpusEntry> entries;

    std::filesystem::path file(const CorpusEntry& e, const std::string& ext) const {
        return root / e.model_id / ("view" + std::to_string(e.view) + ext);
    }
};

/// Parses <dir>/index.txt. Throws FormatError on malformed lines.
CorpusIndex load_corpus_index(const std::filesystem::path& dir);

/// One training pair: input image, camera-frame ground truth, visibility bits and pose.
struct CorpusSample {
    OrientationImage image;
    HairModel hair;
    std::vector<std::uint8_t> visible;
    Pose pose;
};

CorpusSample load_sample(const CorpusIndex& index, const CorpusEntry& entry);

/// Entry indices split by model id (never by view) with a seeded shuffle.
struct CorpusSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
CorpusSplit split_by_model(const CorpusIndex& index, double test_fraction, std::uint64_t seed);

}  // namespace hairnet
