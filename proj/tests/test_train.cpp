#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hairnet/datagen.hpp"
#include "hairnet/errors.hpp"
#include "hairnet/train.hpp"
#include "test_util.hpp"

using namespace hairnet;

namespace {

/// A tiny-profile corpus shared by the tests in this file.
class TrainFixture : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new test::TempDir;
        DatasetConfig cfg;
        cfg.base_styles = 2;
        cfg.blends_per_pair = 0;
        cfg.views = 2;
        cfg.input_res = 32;
        cfg.scalp_res = 4;
        cfg.samples = 4;
        cfg.seed = 3;
        build_dataset(cfg, corpus());
        index_ = new CorpusIndex(load_corpus_index(corpus()));
        samples_ = new std::vector<TrainingSample>;
        for (const auto& e : index_->entries) {
            samples_->push_back(make_training_sample(load_sample(*index_, e), ScaleProfile::tiny(), false));
        }
    }
    static void TearDownTestSuite() {
        delete samples_;
        delete index_;
        delete dir_;
    }
    static std::filesystem::path corpus() { return dir_->path() / "corpus"; }

    static TrainConfig tiny_config() {
        TrainConfig c;
        c.profile = "tiny";
        c.epochs = 3;
        c.batch_size = 3;
        c.lr = 1e-3;
        c.seed = 7;
        c.corpus = corpus().string();
        c.test_fraction = 0.25;
        return c;
    }

    static std::string read(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    static test::TempDir* dir_;
    static CorpusIndex* index_;
    static std::vector<TrainingSample>* samples_;
};

test::TempDir* TrainFixture::dir_ = nullptr;
CorpusIndex* TrainFixture::index_ = nullptr;
std::vector<TrainingSample>* TrainFixture::samples_ = nullptr;

}  // namespace

TEST(TrainConfigTest, DefaultsAndSchedule) {
    const TrainConfig c;
    EXPECT_EQ(c.epochs, 500);
    EXPECT_EQ(c.batch_size, 32);
    EXPECT_DOUBLE_EQ(c.lr, 1e-4);
    EXPECT_EQ(c.boundary(), 250);
    EXPECT_DOUBLE_EQ(c.lr_at_epoch(249), 1e-4);
    EXPECT_DOUBLE_EQ(c.lr_at_epoch(250), 2e-4);
    EXPECT_DOUBLE_EQ(c.loss.lambda_curv, 1.0);
    EXPECT_DOUBLE_EQ(c.loss.lambda_col, 1e-4);

    TrainConfig d;
    d.epochs = 40;
    EXPECT_EQ(d.boundary(), 20);
}

TEST(TrainConfigTest, TextRoundTripAndValidation) {
    TrainConfig c;
    c.epochs = 12;
    c.loss.no_vaw = true;
    c.profile = "desk";
    c.lr = 3e-4;
    const auto back = TrainConfig::from_config(KeyValueConfig::parse(c.to_text()));
    EXPECT_EQ(back.to_text(), c.to_text());
    EXPECT_TRUE(back.loss.no_vaw);
    EXPECT_THROW(TrainConfig::from_config(KeyValueConfig::parse("batch_size = 0\n")), ConfigError);
    EXPECT_THROW(TrainConfig::from_config(KeyValueConfig::parse("lamda_curv = 1\n")), ConfigError);
}

TEST(TrainConfigTest, StepLineFormat) {
    StepRecord r{5, 1, {0.5, 0.25, 0.125, 0.75}, 1e-4};
    const auto line = format_step(r);
    EXPECT_EQ(line.rfind("5, 1, ", 0), 0u);
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
}

TEST_F(TrainFixture, EmptyTrainingSetThrows) {
    EXPECT_THROW(train(tiny_config(), {}), std::invalid_argument);
}

TEST_F(TrainFixture, NoCollisionTotalIsPosPlusCurv) {
    auto c = tiny_config();
    c.loss.no_collision = true;
    const auto r = train(c, *samples_);
    ASSERT_FALSE(r.history.empty());
    for (const auto& s : r.history) EXPECT_EQ(s.loss.total, s.loss.pos + c.loss.lambda_curv * s.loss.curv);
}

TEST_F(TrainFixture, LoggedLrFollowsSchedule) {
    auto c = tiny_config();
    c.epochs = 4;
    const auto r = train(c, *samples_);
    for (const auto& s : r.history) EXPECT_DOUBLE_EQ(s.lr, s.epoch >= 2 ? 2e-3 : 1e-3);
}

TEST_F(TrainFixture, SameSeedSameLogsAndCheckpoint) {
    test::TempDir out;
    const auto c = tiny_config();
    train_from_corpus(c, out.path() / "a");
    train_from_corpus(c, out.path() / "b");
    EXPECT_EQ(read(out.path() / "a" / "metrics.log"), read(out.path() / "b" / "metrics.log"));
    EXPECT_EQ(read(out.path() / "a" / "checkpoint.hnet"), read(out.path() / "b" / "checkpoint.hnet"));
    EXPECT_FALSE(read(out.path() / "a" / "metrics.log").empty());
    const auto cfg = TrainConfig::from_config(KeyValueConfig::load(out.path() / "a" / "train_config.txt"));
    EXPECT_EQ(cfg.to_text(), c.to_text());
}

TEST_F(TrainFixture, ResumeIsBitExact) {
    test::TempDir out;
    auto c = tiny_config();
    c.epochs = 4;
    const auto straight = train(c, *samples_);

    TrainOutput o;
    o.dir = out.path();
    auto first = c;
    first.max_steps = 5;  // stops mid-epoch; the final step is checkpointed
    train(first, *samples_, o);
    o.resume = true;
    const auto rest = train(c, *samples_, o);

    EXPECT_EQ(encode_checkpoint(rest.checkpoint), encode_checkpoint(straight.checkpoint));
    ASSERT_EQ(rest.history.size() + 5, straight.history.size());
    for (std::size_t k = 0; k < rest.history.size(); ++k) {
        EXPECT_EQ(format_step(rest.history[k]), format_step(straight.history[k + 5]));
    }
}

TEST_F(TrainFixture, ResumeRejectsOtherProfile) {
    test::TempDir out;
    TrainOutput o;
    o.dir = out.path();
    auto c = tiny_config();
    c.max_steps = 1;
    train(c, *samples_, o);
    o.resume = true;
    c.profile = "desk";
    EXPECT_THROW(train(c, *samples_, o), FormatError);
}

TEST_F(TrainFixture, OracleEvaluationIsZero) {
    std::vector<std::size_t> all(index_->entries.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const Predictor oracle = [](const CorpusSample& s) { return std::pair{s.hair, s.pose}; };
    const auto m = evaluate(oracle, *index_, all);
    ASSERT_TRUE(m.visible.has_value());
    ASSERT_TRUE(m.invisible.has_value());
    EXPECT_EQ(*m.visible, 0.0);
    EXPECT_EQ(*m.invisible, 0.0);
    EXPECT_LE(m.collision, 1e-8);
    EXPECT_THROW(evaluate(oracle, *index_, std::span<const std::size_t>{}), std::invalid_argument);
}

TEST_F(TrainFixture, EpochMetricsMatchEvalRecomputation) {
    const auto r = train(tiny_config(), *samples_);
    std::vector<std::size_t> all(index_->entries.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto m = evaluate_epoch(r.checkpoint, *index_, all);
    ASSERT_TRUE(m.visible && m.invisible);
    EXPECT_TRUE(std::isfinite(*m.visible) && *m.visible >= 0.0);
    EXPECT_TRUE(std::isfinite(*m.invisible) && *m.invisible >= 0.0);
    EXPECT_GE(m.collision, 0.0);

    // Independent pooling of the per-pair errors.
    double sv = 0, si = 0, sc = 0;
    std::size_t nv = 0, ni = 0;
    const auto predictor = network_predictor(r.checkpoint.params);
    for (std::size_t k : all) {
        const auto s = load_sample(*index_, index_->entries[k]);
        const auto [pred, pose] = predictor(s);
        const auto e = pos_error(pred, s.hair, s.visible);
        if (e.visible) sv += *e.visible * static_cast<double>(e.visible_count);
        if (e.invisible) si += *e.invisible * static_cast<double>(e.invisible_count);
        nv += e.visible_count;
        ni += e.invisible_count;
        sc += collision_error(pred, EllipsoidSet::default_body(), pose);
    }
    EXPECT_NEAR(*m.visible, sv / static_cast<double>(nv), 1e-12);
    EXPECT_NEAR(*m.invisible, si / static_cast<double>(ni), 1e-12);
    EXPECT_NEAR(m.collision, sc / static_cast<double>(all.size()), 1e-12);
}

TEST_F(TrainFixture, TotalLossFallsOnOverfit) {
    auto c = tiny_config();
    c.epochs = 200;
    c.batch_size = 8;  // the whole set, so every step sees the same objective
    const auto r = train(c, *samples_);
    EXPECT_LT(r.history.back().loss.total, 0.1 * r.history.front().loss.total);
}
