#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "dlpr/cli.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace {

using dlpr::testing::read_bytes;
using dlpr::testing::TempDir;

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run dlpr_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = dlpr::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string p(const std::filesystem::path& path) { return path.string(); }

void make_data(const TempDir& dir, const std::string& seed = "2") {
    const auto r = dlpr_run({"synth", "--classes", "3", "--channels", "4", "--windows-per-class", "20", "--seed", seed,
                             "--out", p(dir / "data")});
    ASSERT_EQ(r.code, dlpr::cli::kOk) << r.err;
}

Run train(const TempDir& dir, const std::string& out, const std::string& seed = "1") {
    return dlpr_run({"train", "--data", p(dir / "data"), "--window", "300", "--shift", "50", "--batch", "16",
                     "--epochs", "3", "--seed", seed, "--out", p(dir / out)});
}

std::string metrics_without_timing(const std::filesystem::path& path) {
    auto j = nlohmann::json::parse(read_bytes(path));
    j.erase("training_time_sec");
    return j.dump();
}

TEST(Cli, SynthThenTrainWritesArtifacts) {
    TempDir dir("cli_train");
    make_data(dir);
    const auto r = train(dir, "run");
    ASSERT_EQ(r.code, dlpr::cli::kOk) << r.err;
    for (const char* name : {"metrics.json", "confusion.csv", "curves.csv", "model.dlprm"})
        EXPECT_TRUE(std::filesystem::exists(dir / "run" / name)) << name;
    const auto metrics = nlohmann::json::parse(read_bytes(dir / "run" / "metrics.json"));
    EXPECT_TRUE(metrics.contains("accuracy"));
    EXPECT_TRUE(metrics.contains("training_time_sec"));
    const std::string curves = read_bytes(dir / "run" / "curves.csv");
    EXPECT_EQ(curves.substr(0, curves.find('\n')), "epoch,loss,train_accuracy,test_accuracy");
}

TEST(Cli, IdenticalArgumentsGiveIdenticalArtifacts) {
    TempDir dir("cli_det");
    make_data(dir);
    ASSERT_EQ(train(dir, "a").code, 0);
    ASSERT_EQ(train(dir, "b").code, 0);
    EXPECT_EQ(read_bytes(dir / "a" / "model.dlprm"), read_bytes(dir / "b" / "model.dlprm"));
    EXPECT_EQ(read_bytes(dir / "a" / "confusion.csv"), read_bytes(dir / "b" / "confusion.csv"));
    EXPECT_EQ(read_bytes(dir / "a" / "curves.csv"), read_bytes(dir / "b" / "curves.csv"));
    EXPECT_EQ(metrics_without_timing(dir / "a" / "metrics.json"), metrics_without_timing(dir / "b" / "metrics.json"));
    ASSERT_EQ(train(dir, "c", "9").code, 0);
    EXPECT_NE(read_bytes(dir / "a" / "model.dlprm"), read_bytes(dir / "c" / "model.dlprm"));
}

TEST(Cli, SynthIsByteIdentical) {
    TempDir a("cli_synth_a"), b("cli_synth_b");
    make_data(a);
    make_data(b);
    EXPECT_EQ(read_bytes(a / "data" / "rec_000.csv"), read_bytes(b / "data" / "rec_000.csv"));
    EXPECT_EQ(read_bytes(a / "data" / "rec_002.meta.txt"), read_bytes(b / "data" / "rec_002.meta.txt"));
}

TEST(Cli, UsageErrors) {
    TempDir dir("cli_usage");
    make_data(dir);
    const auto no_seed = dlpr_run({"train", "--data", p(dir / "data"), "--window", "300", "--shift", "50", "--out",
                                   p(dir / "run")});
    EXPECT_EQ(no_seed.code, dlpr::cli::kUsage);
    EXPECT_NE(no_seed.err.find("--seed"), std::string::npos) << no_seed.err;
    EXPECT_EQ(dlpr_run({"train", "--bogus"}).code, dlpr::cli::kUsage);
    EXPECT_EQ(dlpr_run({"frobnicate"}).code, dlpr::cli::kUsage);
    EXPECT_EQ(dlpr_run({}).code, dlpr::cli::kUsage);
    EXPECT_EQ(dlpr_run({"train", "--data", p(dir / "data"), "--window", "300", "--window-ms", "150", "--seed", "1",
                        "--out", p(dir / "run")})
                  .code,
              dlpr::cli::kUsage);
    EXPECT_EQ(dlpr_run({"features", "--data", p(dir / "data"), "--classify"}).code, dlpr::cli::kUsage);
}

TEST(Cli, HelpForEverySubcommand) {
    for (const char* cmd : {"synth", "preprocess", "features", "train", "eval", "sweep", "gradcheck", "report"}) {
        const auto r = dlpr_run({cmd, "--help"});
        EXPECT_EQ(r.code, dlpr::cli::kOk) << cmd;
        EXPECT_NE((r.out + r.err).find("--"), std::string::npos) << cmd;
    }
}

TEST(Cli, DataErrors) {
    TempDir dir("cli_data");
    make_data(dir);
    dlpr::testing::write_text(dir / "bad.dlprm", "not a model");
    EXPECT_EQ(dlpr_run({"eval", "--model", p(dir / "bad.dlprm"), "--data", p(dir / "data")}).code,
              dlpr::cli::kDataError);
    EXPECT_EQ(dlpr_run({"train", "--data", p(dir / "missing"), "--window", "300", "--shift", "50", "--seed", "1",
                        "--out", p(dir / "run")})
                  .code,
              dlpr::cli::kDataError);
    EXPECT_EQ(dlpr_run({"train", "--data", p(dir / "data"), "--window", "100000", "--shift", "50", "--seed", "1",
                        "--out", p(dir / "run")})
                  .code,
              dlpr::cli::kDataError);
}

TEST(Cli, NonFiniteTrainingIsNumericFailure) {
    TempDir dir("cli_nan");
    make_data(dir);
    const auto r = dlpr_run({"train", "--data", p(dir / "data"), "--window", "300", "--shift", "50", "--seed", "1",
                             "--epochs", "20", "--lr", "1e300", "--out", p(dir / "run")});
    EXPECT_EQ(r.code, dlpr::cli::kNumericError) << r.err;
}

TEST(Cli, GradcheckPasses) {
    const auto r = dlpr_run({"gradcheck", "--seed", "42"});
    EXPECT_EQ(r.code, dlpr::cli::kOk) << r.out << r.err;
    EXPECT_NE(r.out.find("toy_model"), std::string::npos);
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, EvalAndReportUseSavedModel) {
    TempDir dir("cli_eval");
    make_data(dir);
    ASSERT_EQ(train(dir, "run").code, 0);
    const auto model = p(dir / "run" / "model.dlprm");
    const auto e = dlpr_run({"eval", "--model", model, "--data", p(dir / "data"), "--seed", "1", "--out",
                             p(dir / "eval")});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "eval" / "metrics.json"));
    // the test partition of seed 1 is exactly what train scored
    EXPECT_EQ(nlohmann::json::parse(read_bytes(dir / "eval" / "metrics.json"))["confusion"],
              nlohmann::json::parse(read_bytes(dir / "run" / "metrics.json"))["confusion"]);
    const auto r = dlpr_run({"report", "--data", p(dir / "data"), "--window", "300", "--shift", "50", "--model", model});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("subject_id,dash_score,accuracy\nsynth,,", 0), 0u) << r.out;
}

TEST(Cli, PreprocessAndFeatures) {
    TempDir dir("cli_pre");
    make_data(dir);
    const auto pre = dlpr_run({"preprocess", "--data", p(dir / "data"), "--window", "300", "--shift", "50", "--out",
                               p(dir / "pre.csv")});
    ASSERT_EQ(pre.code, 0) << pre.err;
    const std::string csv = read_bytes(dir / "pre.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "mpp_ch1,mpp_ch2,mpp_ch3,mpp_ch4,mzp_ch1,mzp_ch2,mzp_ch3,mzp_ch4,label");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 20);
    const auto feat = dlpr_run({"features", "--data", p(dir / "data"), "--window", "300", "--shift", "50", "--out",
                                p(dir / "feat.csv")});
    ASSERT_EQ(feat.code, 0) << feat.err;
    const std::string features = read_bytes(dir / "feat.csv");
    EXPECT_EQ(features.substr(0, features.find('\n')),
              "ch1_mav,ch1_wl,ch1_zc,ch1_ssc,ch2_mav,ch2_wl,ch2_zc,ch2_ssc,ch3_mav,ch3_wl,ch3_zc,ch3_ssc,"
              "ch4_mav,ch4_wl,ch4_zc,ch4_ssc,label");
}

TEST(Cli, SweepWritesOneRunPerBatch) {
    TempDir dir("cli_sweep");
    make_data(dir);
    const auto r = dlpr_run({"sweep", "--data", p(dir / "data"), "--window", "300", "--shift", "50", "--epochs", "1",
                             "--seed", "1", "--batches", "8,16,24", "--out", p(dir / "sweep")});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* b : {"batch_8", "batch_16", "batch_24"})
        EXPECT_TRUE(std::filesystem::exists(dir / "sweep" / b / "metrics.json")) << b;
    const std::string table = read_bytes(dir / "sweep" / "sweep.csv");
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
}

}  // namespace
