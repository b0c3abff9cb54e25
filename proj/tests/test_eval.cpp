#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "hairnet/datagen.hpp"
#include "hairnet/errors.hpp"
#include "hairnet/eval.hpp"
#include "test_util.hpp"

using namespace hairnet;

namespace {

HairModel offset_model(const HairModel& m, Vec3 d) {
    HairModel out = m;
    for (auto& s : out.strands) {
        for (auto& p : s.samples) p = Vec3f(Vec3(p) + d);
    }
    return out;
}

HairModel small_model() {
    GeneratorOptions o;
    o.scalp_res = 4;
    o.samples = 6;
    return procedural_style(StyleClass::parse("S_s"), 2, o);
}

class EvalCorpus : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new test::TempDir;
        DatasetConfig cfg;
        cfg.base_styles = 3;
        cfg.blends_per_pair = 0;
        cfg.views = 2;
        cfg.input_res = 32;
        cfg.scalp_res = 4;
        cfg.samples = 4;
        cfg.seed = 11;
        build_dataset(cfg, dir_->path() / "c");
        index_ = new CorpusIndex(load_corpus_index(dir_->path() / "c"));
    }
    static void TearDownTestSuite() {
        delete index_;
        delete dir_;
    }
    static std::vector<std::size_t> all() {
        std::vector<std::size_t> v(index_->entries.size());
        std::iota(v.begin(), v.end(), std::size_t{0});
        return v;
    }
    static test::TempDir* dir_;
    static CorpusIndex* index_;
};
test::TempDir* EvalCorpus::dir_ = nullptr;
CorpusIndex* EvalCorpus::index_ = nullptr;

}  // namespace

TEST(EvalMetricsTest, UniformOffsetGivesSquaredDistance) {
    const auto gt = small_model();
    const auto n = static_cast<std::size_t>(gt.strand_count() * gt.samples_per_strand());
    std::vector<std::uint8_t> vis(n);
    for (std::size_t k = 0; k < n; ++k) vis[k] = k % 3 == 0 ? 1 : 0;
    const auto self = pos_error(gt, gt, vis);
    EXPECT_EQ(*self.visible, 0.0);
    EXPECT_EQ(*self.invisible, 0.0);

    const auto e = pos_error(offset_model(gt, {0.0, 0.1, 0.0}), gt, vis);
    ASSERT_TRUE(e.visible && e.invisible);
    EXPECT_NEAR(*e.visible, 0.01, 1e-8);
    EXPECT_NEAR(*e.invisible, 0.01, 1e-8);
    EXPECT_EQ(e.visible_count + e.invisible_count, n);
}

TEST(EvalMetricsTest, NoVisibleSamplesIsAbsent) {
    const auto gt = small_model();
    std::vector<std::uint8_t> vis(static_cast<std::size_t>(gt.strand_count() * gt.samples_per_strand()), 0);
    const auto e = pos_error(gt, gt, vis);
    EXPECT_FALSE(e.visible.has_value());
    ASSERT_TRUE(e.invisible.has_value());
    EXPECT_EQ(*e.invisible, 0.0);
    EXPECT_THROW(pos_error(gt, gt, std::vector<std::uint8_t>(3)), std::invalid_argument);
}

TEST(EvalMetricsTest, MaskedDistance) {
    OrientationImage a(4, 4), b(4, 4);
    EXPECT_EQ(masked_orientation_distance(a, b), std::numeric_limits<double>::infinity());
    a.at(2, 1, 1) = b.at(2, 1, 1) = OrientationImage::kHair;
    a.at(0, 1, 1) = 0.5f;
    b.at(0, 1, 1) = 0.1f;
    a.at(2, 2, 2) = OrientationImage::kHair;  // only in a: ignored
    a.at(0, 2, 2) = 1.0f;
    // One shared pixel; squared length of the channel difference vector.
    EXPECT_NEAR(masked_orientation_distance(a, b), 0.4 * 0.4, 1e-7);
    EXPECT_THROW(masked_orientation_distance(a, OrientationImage(5, 4)), ShapeError);
}

TEST_F(EvalCorpus, NearestNeighbourFindsExactImage) {
    const auto db = NnDatabase::build(*index_, all());
    for (std::size_t k : all()) {
        const auto s = load_sample(*index_, index_->entries[k]);
        const auto r = nn_baseline(s.image, db);
        EXPECT_EQ(r.entry, k);
        EXPECT_TRUE(geometry_equal(r.hair, s.hair));
    }
}

TEST(EvalNearest, SurvivesSmallNoiseOnSeparatedCorpus) {
    // Frontal views of distinct classes, no mirrors: every pair of images is far apart.
    test::TempDir dir;
    DatasetConfig cfg;
    cfg.base_styles = 4;
    cfg.mirror = false;
    cfg.blends_per_pair = 0;
    cfg.views = 1;
    cfg.yaw_range = cfg.pitch_range = cfg.roll_range = 0.0;
    cfg.translation_frac = 0.0;
    cfg.input_res = 32;
    cfg.scalp_res = 4;
    cfg.samples = 4;
    build_dataset(cfg, dir.path());
    const auto index = load_corpus_index(dir.path());
    std::vector<std::size_t> all(index.entries.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto db = NnDatabase::build(index, all);
    std::mt19937_64 rng(3);
    std::normal_distribution<float> n(0.0f, 0.02f);
    for (std::size_t k : all) {
        auto img = load_sample(index, index.entries[k]).image;
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                if (!img.is_hair(y, x)) continue;
                img.at(0, y, x) += n(rng);
                img.at(1, y, x) += n(rng);
            }
        }
        EXPECT_EQ(db.query(img), k);
    }
}

TEST_F(EvalCorpus, TiesGoToLowestModelId) {
    // A query sharing no hair pixel with anything is equally far from every entry.
    NnDatabase db = NnDatabase::build(*index_, all());
    std::vector<std::size_t> reversed(db.entries.rbegin(), db.entries.rend());
    db = NnDatabase::build(*index_, reversed);
    const OrientationImage empty(index_->input_res, index_->input_res);
    const auto& e = index_->entries[db.entries[db.query(empty)]];
    for (const auto& other : index_->entries) {
        EXPECT_LE(e.model_id, other.model_id);
    }
    EXPECT_EQ(e.view, 0);
}

TEST_F(EvalCorpus, NearestNeighbourIsCollisionFree) {
    const auto m = evaluate(nn_predictor(NnDatabase::build(*index_, all())), *index_, all());
    EXPECT_LE(m.collision, 1e-8);
    EXPECT_EQ(m.pairs, static_cast<int>(all().size()));
    EXPECT_EQ(*m.visible, 0.0);  // every query is in the database
}

TEST(Report, EmptyDirectoryIsAllAbsent) {
    test::TempDir d;
    const auto rows = report(d.path());
    ASSERT_EQ(rows.size(), report_variants().size());
    for (const auto& r : rows) EXPECT_FALSE(r.metrics.has_value());
    EXPECT_TRUE(std::filesystem::exists(d.path() / "report.txt"));
    EXPECT_TRUE(std::filesystem::exists(d.path() / "report.tsv"));
    EXPECT_NE(format_report_text(rows).find("absent"), std::string::npos);
}

TEST(Report, MetricsRoundTripAndPurity) {
    test::TempDir d;
    EvalMetrics m;
    m.visible = 0.0123456789012345;
    m.collision = 2.5e-7;
    m.pairs = 12;
    std::filesystem::create_directories(d.path() / "full");
    save_metrics(m, d.path() / "full" / "metrics.txt");
    const auto back = load_metrics(d.path() / "full" / "metrics.txt");
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(back->visible, m.visible);
    EXPECT_FALSE(back->invisible.has_value());
    EXPECT_EQ(back->collision, m.collision);
    EXPECT_EQ(back->pairs, 12);

    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    report(d.path());
    const auto first_txt = slurp(d.path() / "report.txt");
    const auto first_tsv = slurp(d.path() / "report.tsv");
    const auto rows = report(d.path());
    EXPECT_EQ(slurp(d.path() / "report.txt"), first_txt);
    EXPECT_EQ(slurp(d.path() / "report.tsv"), first_tsv);
    EXPECT_EQ(rows[0].variant, "full");
    ASSERT_TRUE(rows[0].metrics.has_value());
    EXPECT_FALSE(rows[1].metrics.has_value());

    // One header line, then one tab-separated row per variant.
    std::istringstream tsv(first_tsv);
    std::string line;
    int lines = 0;
    while (std::getline(tsv, line)) {
        ++lines;
        EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 3) << line;
    }
    EXPECT_EQ(lines, 1 + static_cast<int>(report_variants().size()));
}
