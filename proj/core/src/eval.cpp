#include "hairnet/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hairnet/errors.hpp"
#include "hairnet/losses.hpp"
#include "hairnet/parallel.hpp"

namespace hairnet {

PosError pos_error(const HairModel& pred, const HairModel& gt, std::span<const std::uint8_t> visible) {
    const int n = gt.strand_count(), m = gt.samples_per_strand();
    if (pred.strand_count() != n || pred.samples_per_strand() != m) {
        throw std::invalid_argument("pos_error: models differ in strand or sample count");
    }
    if (visible.size() != static_cast<std::size_t>(n) * m) throw std::invalid_argument("pos_error: visibility size mismatch");
    double sv = 0.0, si = 0.0;
    PosError e;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const Vec3 d = Vec3(pred.strands[i].samples[j]) - Vec3(gt.strands[i].samples[j]);
            const double d2 = dot(d, d);
            if (visible[static_cast<std::size_t>(i) * m + j]) {
                sv += d2;
                ++e.visible_count;
            } else {
                si += d2;
                ++e.invisible_count;
            }
        }
    }
    if (e.visible_count) e.visible = sv / static_cast<double>(e.visible_count);
    if (e.invisible_count) e.invisible = si / static_cast<double>(e.invisible_count);
    return e;
}

double collision_error(const HairModel& pred, const EllipsoidSet& body, const Pose& pose) {
    return collision_value(pred, body, pose);
}

double masked_orientation_distance(const OrientationImage& a, const OrientationImage& b) {
    if (a.height != b.height || a.width != b.width) throw ShapeError("orientation images differ in size");
    double sum = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            if (!a.is_hair(y, x) || !b.is_hair(y, x)) continue;
            const double d0 = a.at(0, y, x) - b.at(0, y, x);
            const double d1 = a.at(1, y, x) - b.at(1, y, x);
            sum += d0 * d0 + d1 * d1;
            ++count;
        }
    }
    return count ? sum / static_cast<double>(count) : std::numeric_limits<double>::infinity();
}

NnDatabase NnDatabase::build(const CorpusIndex& index, std::span<const std::size_t> entries) {
    if (entries.empty()) throw std::invalid_argument("nearest-neighbour corpus is empty");
    NnDatabase db;
    db.index = &index;
    db.entries.assign(entries.begin(), entries.end());
    db.images.resize(entries.size());
    parallel_for(entries.size(), [&](std::size_t k) {
        db.images[k] = load_orientation(index.file(index.entries[entries[k]], ".ornt"));
    });
    return db;
}

std::size_t NnDatabase::query(const OrientationImage& image) const {
    std::vector<double> dist(images.size());
    parallel_for(images.size(), [&](std::size_t k) { dist[k] = masked_orientation_distance(image, images[k]); });
    std::size_t best = 0;
    for (std::size_t k = 1; k < images.size(); ++k) {
        const auto& e = index->entries[entries[k]];
        const auto& b = index->entries[entries[best]];
        if (dist[k] < dist[best] ||
            (dist[k] == dist[best] && (e.model_id < b.model_id || (e.model_id == b.model_id && e.view < b.view)))) {
            best = k;
        }
    }
    return best;
}

NnResult nn_baseline(const OrientationImage& query, const NnDatabase& db) {
    const std::size_t k = db.query(query);
    const auto& entry = db.index->entries[db.entries[k]];
    return {load_hair(db.index->file(entry, ".hair")), entry.pose(), db.entries[k]};
}

EvalMetrics evaluate(const Predictor& predictor, const CorpusIndex& index, std::span<const std::size_t> entries,
                     const EllipsoidSet& body) {
    if (entries.empty()) throw std::invalid_argument("evaluation set is empty");
    std::vector<PosError> pos(entries.size());
    std::vector<double> col(entries.size());
    parallel_for(entries.size(), [&](std::size_t k) {
        const auto sample = load_sample(index, index.entries[entries[k]]);
        const auto [pred, pose] = predictor(sample);
        pos[k] = pos_error(pred, sample.hair, sample.visible);
        col[k] = collision_error(pred, body, pose);
    });
    double sv = 0.0, si = 0.0, sc = 0.0;
    std::size_t nv = 0, ni = 0;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (pos[k].visible) sv += *pos[k].visible * static_cast<double>(pos[k].visible_count);
        if (pos[k].invisible) si += *pos[k].invisible * static_cast<double>(pos[k].invisible_count);
        nv += pos[k].visible_count;
        ni += pos[k].invisible_count;
        sc += col[k];
    }
    EvalMetrics m;
    if (nv) m.visible = sv / static_cast<double>(nv);
    if (ni) m.invisible = si / static_cast<double>(ni);
    m.collision = sc / static_cast<double>(entries.size());
    m.pairs = static_cast<int>(entries.size());
    return m;
}

Predictor network_predictor(const HairNetParams<float>& params) {
    return [&params](const CorpusSample& s) {
        const auto p = predict(params, s.image);
        return std::make_pair(model_from_network(p.positions, p.curvatures, s.hair.grid), s.pose);
    };
}

Predictor nn_predictor(const NnDatabase& db) {
    return [&db](const CorpusSample& s) {
        auto r = nn_baseline(s.image, db);
        return std::make_pair(std::move(r.hair), r.pose);
    };
}

// ---- report ---------------------------------------------------------------------------------

const std::vector<std::pair<std::string, std::string>>& report_variants() {
    static const std::vector<std::pair<std::string, std::string>> v = {
        {"full", "HairNet"}, {"no_vaw", "-VAW"}, {"no_col", "-Col"}, {"no_curv", "-Curv"}, {"nn", "NN"}};
    return v;
}

namespace {

std::string fmt(const std::optional<double>& v) {
    if (!v) return "absent";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", *v);
    return buf;
}

}  // namespace

void save_metrics(const EvalMetrics& m, const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    std::ostringstream os;
    char buf[64];
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (!v) {
            os << key << " = absent\n";
            return;
        }
        std::snprintf(buf, sizeof buf, "%.17g", *v);
        os << key << " = " << buf << '\n';
    };
    put("visible", m.visible);
    put("invisible", m.invisible);
    put("collision", m.collision);
    os << "pairs = " << m.pairs << '\n';
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f << os.str();
        if (!f) throw FormatError(FormatError::Kind::Io, "cannot write " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::optional<EvalMetrics> load_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    EvalMetrics m;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        key.erase(key.find_last_not_of(' ') + 1);
        value.erase(0, value.find_first_not_of(' '));
        std::optional<double> v;
        if (value != "absent") v = std::stod(value);
        if (key == "visible") m.visible = v;
        else if (key == "invisible") m.invisible = v;
        else if (key == "collision" && v) m.collision = *v;
        else if (key == "pairs" && v) m.pairs = static_cast<int>(*v);
    }
    return m;
}

std::vector<ReportRow> collect_report(const std::filesystem::path& run_dir) {
    std::vector<ReportRow> rows;
    for (const auto& [key, label] : report_variants()) {
        rows.push_back({key, label, load_metrics(run_dir / key / "metrics.txt")});
    }
    return rows;
}

std::string format_report_text(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-10s %16s %16s %16s\n", "variant", "visible_pos", "invisible_pos", "collision");
    os << buf;
    for (const auto& r : rows) {
        const bool ok = r.metrics.has_value();
        std::snprintf(buf, sizeof buf, "%-10s %16s %16s %16s\n", r.label.c_str(),
                      ok ? fmt(r.metrics->visible).c_str() : "absent",
                      ok ? fmt(r.metrics->invisible).c_str() : "absent",
                      ok ? fmt(r.metrics->collision).c_str() : "absent");
        os << buf;
    }
    return os.str();
}

std::string format_report_tsv(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << "variant\tvisible\tinvisible\tcollision\n";
    for (const auto& r : rows) {
        const bool ok = r.metrics.has_value();
        os << r.variant << '\t' << (ok ? fmt(r.metrics->visible) : "absent") << '\t'
           << (ok ? fmt(r.metrics->invisible) : "absent") << '\t'
           << (ok ? fmt(r.metrics->collision) : "absent") << '\n';
    }
    return os.str();
}

std::vector<ReportRow> report(const std::filesystem::path& run_dir) {
    auto rows = collect_report(run_dir);
    std::filesystem::create_directories(run_dir);
    std::ofstream(run_dir / "report.txt", std::ios::trunc) << format_report_text(rows);
    std::ofstream(run_dir / "report.tsv", std::ios::trunc) << format_report_tsv(rows);
    return rows;
}

}  // namespace hairnet
