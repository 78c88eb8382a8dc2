#include <gtest/gtest.h>

#include <numeric>

#include "dlpr/nn/serialize.hpp"
#include "dlpr/rng.hpp"
#include "dlpr/trainer.hpp"
#include "test_support.hpp"

namespace {

using namespace dlpr;
using namespace dlpr::trainer;
using dlpr::testing::kind_of;

data::WindowedDataset random_dataset(std::uint64_t seed, std::size_t n, std::size_t width, int classes,
                                     double separation) {
    Rng rng(seed);
    data::WindowedDataset ds;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
        std::vector<double> row(width);
        for (std::size_t j = 0; j < width; ++j)
            row[j] = rng.normal() + separation * (j % static_cast<std::size_t>(classes) == static_cast<std::size_t>(label));
        ds.inputs.push_back(std::move(row));
        ds.labels.push_back(label);
        ds.subjects.push_back("s");
        ds.repetitions.push_back(1);
        ds.provenance.push_back({0, i});
    }
    return ds;
}

TrainConfig small_config(std::size_t epochs) {
    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.epochs = epochs;
    cfg.seed = 3;
    cfg.spec = nn::ModelSpec::toy(3);
    return cfg;
}

TEST(Accuracy, Examples) {
    EXPECT_DOUBLE_EQ(accuracy(std::vector<int>{0, 1, 2, 2}, std::vector<int>{0, 1, 2, 1}), 0.75);
    EXPECT_DOUBLE_EQ(accuracy(std::vector<int>{1}, std::vector<int>{1}), 1.0);
    EXPECT_EQ(kind_of([] { accuracy(std::vector<int>{}, std::vector<int>{}); }), ErrorKind::EmptyOutput);
    EXPECT_EQ(kind_of([] { accuracy(std::vector<int>{1}, std::vector<int>{1, 2}); }), ErrorKind::ShapeError);
}

TEST(Score, ConfusionTraceMatchesAccuracy) {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 2 + rng.below(6), n = 1 + rng.below(100);
        std::vector<int> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = static_cast<int>(rng.below(k));
            truth[i] = static_cast<int>(rng.below(k));
        }
        const auto m = score(pred, truth, k);
        ASSERT_EQ(m.confusion.size(), k);
        std::size_t trace = 0, total = 0;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) {
                total += m.confusion[a][b];
                if (a == b) trace += m.confusion[a][b];
            }
        EXPECT_EQ(total, n);
        EXPECT_EQ(m.total, n);
        EXPECT_DOUBLE_EQ(m.accuracy, static_cast<double>(trace) / static_cast<double>(n));
        EXPECT_DOUBLE_EQ(m.accuracy, accuracy(pred, truth));
        for (double r : m.recall) EXPECT_TRUE(r >= 0.0 && r <= 1.0);
    }
}

TEST(Score, RecallPerClass) {
    const auto m = score(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 1, 1}, 3);
    EXPECT_EQ(m.confusion[1][0], 1u);
    EXPECT_DOUBLE_EQ(m.recall[0], 1.0);
    EXPECT_DOUBLE_EQ(m.recall[1], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.recall[2], 0.0);
}

TEST(Train, OverfitsRandomLabels) {
    Rng rng(42);
    data::WindowedDataset ds;
    for (std::size_t i = 0; i < 32; ++i) {
        std::vector<double> row(8);
        for (auto& v : row) v = rng.normal();
        ds.inputs.push_back(std::move(row));
        ds.labels.push_back(static_cast<int>(rng.below(4)));
    }
    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.epochs = 200;
    cfg.seed = 42;
    cfg.adam.lr = 1e-2;
    cfg.spec = nn::ModelSpec::toy(4);
    cfg.record_curves = false;
    const auto result = train_dlpr(ds, {}, cfg);
    EXPECT_DOUBLE_EQ(result.metrics.accuracy, 1.0);
}

TEST(Train, LearnsSeparableData) {
    const auto train = random_dataset(1, 120, 8, 3, 3.0);
    const auto test = random_dataset(2, 60, 8, 3, 3.0);
    const auto result = train_dlpr(train, test, small_config(30));
    EXPECT_GE(result.metrics.accuracy, 0.9);
    EXPECT_EQ(result.metrics.train_curve.size(), 30u);
    EXPECT_EQ(result.metrics.test_curve.size(), 30u);
    EXPECT_EQ(result.metrics.loss_curve.size(), 30u);
    EXPECT_LT(result.metrics.loss_curve.back(), result.metrics.loss_curve.front());
    EXPECT_DOUBLE_EQ(result.metrics.test_curve.back(), result.metrics.accuracy);
    EXPECT_GT(result.metrics.training_time_sec, 0.0);
}

TEST(Train, DeterministicPerSeed) {
    const auto train = random_dataset(1, 50, 8, 3, 1.0);
    const auto test = random_dataset(2, 30, 8, 3, 1.0);
    const auto a = train_dlpr(train, test, small_config(5));
    const auto b = train_dlpr(train, test, small_config(5));
    EXPECT_EQ(nn::encode_model(a.model), nn::encode_model(b.model));
    EXPECT_EQ(metrics_to_json(a.metrics, false).dump(), metrics_to_json(b.metrics, false).dump());
    EXPECT_FALSE(metrics_to_json(a.metrics, false).contains("training_time_sec"));
    EXPECT_TRUE(metrics_to_json(a.metrics, true).contains("training_time_sec"));
    auto other = small_config(5);
    other.seed = 4;
    EXPECT_NE(nn::encode_model(train_dlpr(train, test, other).model), nn::encode_model(a.model));
}

TEST(Train, TimeGrowsWithEpochs) {
    const auto train = random_dataset(1, 200, 8, 3, 1.0);
    auto cfg = small_config(20);
    cfg.record_curves = false;
    const double t20 = train_dlpr(train, {}, cfg).metrics.training_time_sec;
    cfg.epochs = 60;
    const double t60 = train_dlpr(train, {}, cfg).metrics.training_time_sec;
    EXPECT_GT(t20, 0.0);
    EXPECT_LT(t20, t60);
}

TEST(Train, NonFiniteLossAborts) {
    auto train = random_dataset(1, 40, 8, 3, 1.0);
    auto cfg = small_config(50);
    cfg.adam.lr = 1e300;
    cfg.record_curves = false;
    try {
        train_dlpr(train, {}, cfg);
        FAIL() << "training with lr 1e300 stayed finite";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NumericError);
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos);
    }
}

TEST(Train, ConfigurationErrors) {
    const auto train = random_dataset(1, 40, 8, 3, 1.0);
    auto cfg = small_config(1);
    cfg.batch_size = 1;
    EXPECT_EQ(kind_of([&] { train_dlpr(train, {}, cfg); }), ErrorKind::ConfigError);
    cfg = small_config(1);
    cfg.spec = nn::ModelSpec::toy(2);  // labels go up to 2
    EXPECT_EQ(kind_of([&] { train_dlpr(train, {}, cfg); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([&] { train_dlpr(random_dataset(1, 40, 10, 3, 1.0), {}, small_config(1)); }),
              ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([&] { train_dlpr({}, {}, small_config(1)); }), ErrorKind::EmptyOutput);
}

TEST(Train, AutoArchitecturePicksByWidth) {
    EXPECT_EQ(choose_spec(Arch::Auto, 8, 5), nn::ModelSpec::compact(8, 5));
    EXPECT_EQ(choose_spec(Arch::Auto, 24, 5), nn::ModelSpec::canonical(24, 5));
    EXPECT_EQ(kind_of([] { choose_spec(Arch::Canonical, 8, 5); }), ErrorKind::ShapeError);
}

TEST(Evaluate, ChunkSizeDoesNotMatter) {
    const auto train = random_dataset(1, 60, 8, 3, 2.0);
    const auto test = random_dataset(2, 37, 8, 3, 2.0);
    const auto result = train_dlpr(train, {}, small_config(5));
    const auto reference = predict(result.model, test, 1000);
    for (std::size_t chunk : {1u, 2u, 5u, 36u}) EXPECT_EQ(predict(result.model, test, chunk), reference);
    const auto a = evaluate(result.model, test, 4);
    const auto b = evaluate(result.model, test, 64);
    EXPECT_EQ(a.confusion, b.confusion);
    EXPECT_EQ(a.accuracy, b.accuracy);
}

TEST(Evaluate, Errors) {
    const auto train = random_dataset(1, 60, 8, 3, 2.0);
    const auto result = train_dlpr(train, {}, small_config(1));
    EXPECT_EQ(kind_of([&] { evaluate(result.model, {}); }), ErrorKind::EmptyOutput);
    EXPECT_EQ(kind_of([&] { evaluate(result.model, random_dataset(2, 10, 8, 5, 1.0)); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([&] { evaluate(result.model, random_dataset(2, 10, 9, 3, 1.0)); }), ErrorKind::ConfigError);
}

TEST(Evaluate, LeavesModelUntouched) {
    const auto train = random_dataset(1, 60, 8, 3, 2.0);
    const auto result = train_dlpr(train, {}, small_config(2));
    const std::string before = nn::encode_model(result.model);
    evaluate(result.model, random_dataset(5, 20, 8, 3, 2.0));
    EXPECT_EQ(nn::encode_model(result.model), before);
}

TEST(BatchSweep, ResultsInInputOrder) {
    const auto train = random_dataset(1, 60, 8, 3, 2.0);
    const auto test = random_dataset(2, 30, 8, 3, 2.0);
    const std::vector<std::size_t> sizes{50, 10, 30};
    const auto results = batch_sweep(train, test, small_config(2), sizes);
    ASSERT_EQ(results.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(results[i].metrics.batch_size, sizes[i]);
}

TEST(Report, PerSubjectCsv) {
    std::vector<SubjectRow> rows(3);
    rows[0].subject.id = "amp1";
    rows[0].subject.dash_score = 12.5;
    rows[0].accuracy = 0.5;
    rows[1].subject.id = "amp2";
    rows[1].accuracy = 1.0;
    rows[2].subject.id = "amp3";
    rows[2].subject.dash_score = 40.0;
    rows[2].accuracy = 0.25;
    EXPECT_EQ(per_subject_report(rows), "subject_id,dash_score,accuracy\namp1,12.5,0.5\namp2,,1\namp3,40,0.25\n");
}

TEST(Report, ConfusionAndCurvesCsv) {
    Metrics m = score(std::vector<int>{0, 1, 1}, std::vector<int>{0, 1, 0}, 2);
    EXPECT_EQ(confusion_csv(m), "truth,pred_0,pred_1\n0,1,1\n1,0,1\n");
    m.loss_curve = {0.5, 0.25};
    m.train_curve = {0.5, 1.0};
    m.test_curve = {0.25, 0.75};
    EXPECT_EQ(curves_csv(m), "epoch,loss,train_accuracy,test_accuracy\n1,0.5,0.5,0.25\n2,0.25,1,0.75\n");
}

TEST(Report, WriteRunArtifacts) {
    dlpr::testing::TempDir dir("run");
    const auto train = random_dataset(1, 40, 8, 3, 2.0);
    const auto result = train_dlpr(train, {}, small_config(2));
    write_run(result, dir.path() / "out");
    for (const char* name : {"metrics.json", "confusion.csv", "curves.csv", "model.dlprm"})
        EXPECT_TRUE(std::filesystem::exists(dir.path() / "out" / name)) << name;
    EXPECT_EQ(dlpr::testing::read_bytes(dir.path() / "out" / "model.dlprm"), nn::encode_model(result.model));
}

}  // namespace
