#include "hairnet/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "hairnet/errors.hpp"

namespace hairnet {

CorpusIndex load_corpus_index(const std::filesystem::path& dir) {
    const auto path = dir / "index.txt";
    std::ifstream in(path);
    if (!in) throw FormatError(FormatError::Kind::Io, "cannot open corpus index " + path.string());
    CorpusIndex index;
    index.root = dir;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string tok;
            while (hs >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
                if (key == "input_res") index.input_res = std::stoi(value);
                else if (key == "scalp_res") index.scalp_res = std::stoi(value);
                else if (key == "samples") index.samples = std::stoi(value);
                else if (key == "extent") index.extent = std::stod(value);
            }
            continue;
        }
        std::istringstream ls(line);
        CorpusEntry e;
        unsigned long long seed = 0;
        if (!(ls >> e.model_id >> e.view >> e.yaw >> e.pitch >> e.roll >> e.translation.x >> e.translation.y >>
              e.translation.z >> seed)) {
            throw FormatError(FormatError::Kind::Invalid, path.string() + ":" + std::to_string(lineno) + ": malformed entry");
        }
        e.seed = seed;
        index.entries.push_back(std::move(e));
    }
    return index;
}

CorpusSample load_sample(const CorpusIndex& index, const CorpusEntry& entry) {
    CorpusSample s;
    s.image = load_orientation(index.file(entry, ".ornt"));
    s.hair = load_hair(index.file(entry, ".hair"));
    s.visible = load_visibility(index.file(entry, ".vis"),
                                static_cast<std::size_t>(s.hair.strand_count()) * s.hair.samples_per_strand());
    s.pose = entry.pose();
    return s;
}

CorpusSplit split_by_model(const CorpusIndex& index, double test_fraction, std::uint64_t seed) {
    std::vector<std::string> ids;
    for (const auto& e : index.entries) {
        if (ids.empty() || ids.back() != e.model_id) {
            if (std::find(ids.begin(), ids.end(), e.model_id) == ids.end()) ids.push_back(e.model_id);
        }
    }
    std::sort(ids.begin(), ids.end());
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ids.size())));
    if (test_fraction > 0.0 && n_test == 0 && ids.size() > 1) n_test = 1;
    n_test = std::min(n_test, ids.size());
    std::map<std::string, bool> is_test;
    for (std::size_t k = 0; k < ids.size(); ++k) is_test[ids[k]] = k < n_test;

    CorpusSplit split;
    for (std::size_t k = 0; k < index.entries.size(); ++k) {
        (is_test[index.entries[k].model_id] ? split.test : split.train).push_back(k);
    }
    return split;
}

}  // namespace hairnet
