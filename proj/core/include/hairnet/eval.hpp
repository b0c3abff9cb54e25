#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hairnet/corpus.hpp"
#include "hairnet/geometry.hpp"
#include "hairnet/hair.hpp"
#include "hairnet/model.hpp"
#include "hairnet/orientation.hpp"

namespace hairnet {

/// Mean squared root-local position error over visible and invisible samples (m^2).
/// A side with no samples is reported as absent.
struct PosError {
    std::optional<double> visible;
    std::optional<double> invisible;
    std::size_t visible_count = 0;
    std::size_t invisible_count = 0;
};

PosError pos_error(const HairModel& pred, const HairModel& gt, std::span<const std::uint8_t> visible);

/// Same computation as the collision loss.
double collision_error(const HairModel& pred, const EllipsoidSet& body, const Pose& pose = {});

// ---- nearest neighbour baseline ---------------------------------------------------------------

/// Mean squared difference of the two orientation channels over pixels that are hair in both
/// images; +inf when they share no hair pixel.
double masked_orientation_distance(const OrientationImage& a, const OrientationImage& b);

/// The corpus entries a query is matched against, images held in memory.
struct NnDatabase {
    const CorpusIndex* index = nullptr;
    std::vector<std::size_t> entries;
    std::vector<OrientationImage> images;

    static NnDatabase build(const CorpusIndex& index, std::span<const std::size_t> entries);

    /// Position in `entries` of the closest image; ties go to the lowest model id, then view.
    std::size_t query(const OrientationImage& image) const;
};

/// Ground-truth model of the nearest corpus entry, with that entry's pose.
struct NnResult {
    HairModel hair;
    Pose pose;
    std::size_t entry = 0;
};
NnResult nn_baseline(const OrientationImage& query, const NnDatabase& db);

// ---- set-level metrics ------------------------------------------------------------------------

struct EvalMetrics {
    std::optional<double> visible;
    std::optional<double> invisible;
    double collision = 0.0;
    int pairs = 0;
};

/// A predictor maps a corpus sample to a camera-frame model plus the pose its collision is
/// measured in.
using Predictor = std::function<std::pair<HairModel, Pose>(const CorpusSample&)>;

/// Pools squared errors over every sample of every pair; collision is the mean per pair.
/// Throws std::invalid_argument for an empty entry list.
EvalMetrics evaluate(const Predictor& predictor, const CorpusIndex& index, std::span<const std::size_t> entries,
                     const EllipsoidSet& body = EllipsoidSet::default_body());

/// Network prediction on the cell grid of the sample, without refinement.
Predictor network_predictor(const HairNetParams<float>& params);
Predictor nn_predictor(const NnDatabase& db);

// ---- report ---------------------------------------------------------------------------------

struct ReportRow {
    std::string variant;
    std::string label;
    std::optional<EvalMetrics> metrics;
};

/// Variant keys in table order: full, no_vaw, no_col, no_curv, nn.
const std::vector<std::pair<std::string, std::string>>& report_variants();

void save_metrics(const EvalMetrics& m, const std::filesystem::path& path);
std::optional<EvalMetrics> load_metrics(const std::filesystem::path& path);

/// Reads <run>/<variant>/metrics.txt for each variant; missing ones are absent rows.
std::vector<ReportRow> collect_report(const std::filesystem::path& run_dir);
std::string format_report_text(const std::vector<ReportRow>& rows);
std::string format_report_tsv(const std::vector<ReportRow>& rows);
/// Writes report.txt and report.tsv into the run directory and returns the rows.
std::vector<ReportRow> report(const std::filesystem::path& run_dir);

}  // namespace hairnet
