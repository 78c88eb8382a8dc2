#include <gtest/gtest.h>

#include <cmath>

#include "dlpr/baselines.hpp"
#include "dlpr/rng.hpp"
#include "test_support.hpp"

namespace {

using namespace dlpr;
using namespace dlpr::baselines;
using dlpr::testing::kind_of;

struct Blobs {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
};

Blobs blobs(Rng& rng, int classes, int per_class, double spacing, double sigma, std::size_t dim = 2) {
    Blobs b;
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < per_class; ++i) {
            std::vector<double> row(dim);
            for (std::size_t j = 0; j < dim; ++j) row[j] = (j == 0 ? spacing * c : 0.0) + sigma * rng.normal();
            b.x.push_back(std::move(row));
            b.y.push_back(c);
        }
    return b;
}

TEST(Knn, SmallExamples) {
    const std::vector<std::vector<double>> x{{0, 0}, {0, 1}, {1, 0}, {5, 5}, {5, 6}};
    const std::vector<int> y{0, 0, 0, 1, 1};
    KnnModel knn(1);
    knn.fit(x, y);
    EXPECT_EQ(knn.predict(std::vector<double>{4.5, 5.0}), 1);
    EXPECT_EQ(knn.predict(std::vector<double>{0.2, 0.2}), 0);
    KnnModel three(3);
    three.fit(x, y);
    EXPECT_EQ(three.predict(std::vector<double>{4.5, 5.0}), 1);  // 2 of 3 neighbours are class 1
    KnnModel five(5);
    five.fit(x, y);
    EXPECT_EQ(five.predict(std::vector<double>{5.0, 5.0}), 0);  // whole set votes 3:2
}

TEST(Knn, VoteTieGoesToLowestLabel) {
    // k = 3 with three distinct labels: one vote each.
    const std::vector<std::vector<double>> x{{1.0}, {-1.0}, {2.0}};
    const std::vector<int> y{2, 1, 0};
    KnnModel knn(3);
    knn.fit(x, y);
    EXPECT_EQ(knn.predict(std::vector<double>{0.0}), 0);
}

TEST(Knn, ConfigurationErrors) {
    const std::vector<std::vector<double>> x{{0.0}, {1.0}, {2.0}};
    const std::vector<int> y{0, 1, 0};
    EXPECT_EQ(kind_of([] { KnnModel().predict(std::vector<double>{0.0}); }), ErrorKind::NotFitted);
    EXPECT_EQ(kind_of([&] { KnnModel(2).fit(x, y); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([&] { KnnModel(5).fit(x, y); }), ErrorKind::ConfigError);
    KnnModel knn(1);
    knn.fit(x, y);
    EXPECT_EQ(kind_of([&] { knn.predict(std::vector<double>{0.0, 1.0}); }), ErrorKind::ShapeError);
}

TEST(Knn, SeparatedBlobs) {
    Rng rng(21);
    const auto train = blobs(rng, 3, 50, 10.0, 0.1);
    const auto test = blobs(rng, 3, 100, 10.0, 0.1);
    KnnModel knn(5);
    knn.fit(train.x, train.y);
    for (std::size_t i = 0; i < test.x.size(); ++i) EXPECT_EQ(knn.predict(test.x[i]), test.y[i]);
}

TEST(Knn, OneNeighbourMemorizesTrainingSet) {
    Rng rng(22);
    const auto train = blobs(rng, 4, 30, 0.5, 1.0, 3);
    KnnModel knn(1);
    knn.fit(train.x, train.y);
    for (std::size_t i = 0; i < train.x.size(); ++i) EXPECT_EQ(knn.predict(train.x[i]), train.y[i]);
}

// Closed-form 2-D discriminant: pooled covariance, explicit 2x2 inverse.
std::vector<double> lda_oracle_2d(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                  const std::vector<double>& q, bool empirical) {
    const int k = 2;
    double mean[2][2] = {}, count[2] = {};
    for (std::size_t i = 0; i < x.size(); ++i) {
        count[y[i]] += 1;
        mean[y[i]][0] += x[i][0];
        mean[y[i]][1] += x[i][1];
    }
    for (int c = 0; c < k; ++c) mean[c][0] /= count[c], mean[c][1] /= count[c];
    double s00 = 0, s01 = 0, s11 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = x[i][0] - mean[y[i]][0], b = x[i][1] - mean[y[i]][1];
        s00 += a * a, s01 += a * b, s11 += b * b;
    }
    const double dof = static_cast<double>(x.size()) - k;
    s00 /= dof, s01 /= dof, s11 /= dof;
    const double shrink = 1e-4 * (s00 + s11) / 2.0;
    s00 += shrink, s11 += shrink;
    const double det = s00 * s11 - s01 * s01;
    const double i00 = s11 / det, i01 = -s01 / det, i11 = s00 / det;
    std::vector<double> out;
    for (int c = 0; c < k; ++c) {
        const double w0 = i00 * mean[c][0] + i01 * mean[c][1];
        const double w1 = i01 * mean[c][0] + i11 * mean[c][1];
        const double prior = empirical ? count[c] / static_cast<double>(x.size()) : 0.5;
        out.push_back(q[0] * w0 + q[1] * w1 - 0.5 * (mean[c][0] * w0 + mean[c][1] * w1) + std::log(prior));
    }
    return out;
}

TEST(Lda, SmallExample) {
    const std::vector<std::vector<double>> x{{0, 0}, {0, 1}, {1, 0}, {2, 2}, {2, 3}, {3, 2}};
    const std::vector<int> y{0, 0, 0, 1, 1, 1};
    LdaModel lda;
    lda.fit(x, y);
    EXPECT_EQ(lda.predict(std::vector<double>{2.0, 2.0}), 1);
    EXPECT_EQ(lda.predict(std::vector<double>{0.5, 0.5}), 0);
    EXPECT_EQ(lda.classes(), (std::vector<int>{0, 1}));
}

TEST(Lda, ScoresMatchClosedForm) {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        Blobs b;
        const int n0 = 5 + static_cast<int>(rng.below(20)), n1 = 5 + static_cast<int>(rng.below(20));
        for (int i = 0; i < n0 + n1; ++i) {
            const int c = i < n0 ? 0 : 1;
            b.x.push_back({rng.normal() + 2.0 * c, 0.5 * rng.normal() + rng.uniform()});
            b.y.push_back(c);
        }
        for (bool empirical : {true, false}) {
            LdaModel lda(empirical ? Priors::Empirical : Priors::Equal);
            lda.fit(b.x, b.y);
            const std::vector<double> q{rng.normal(), rng.normal()};
            const auto got = lda.scores(q);
            const auto want = lda_oracle_2d(b.x, b.y, q, empirical);
            ASSERT_EQ(got.size(), 2u);
            EXPECT_NEAR(got[0], want[0], 1e-9);
            EXPECT_NEAR(got[1], want[1], 1e-9);
        }
    }
}

TEST(Lda, EqualMeansNearChance) {
    Rng rng(24);
    const auto train = blobs(rng, 2, 250, 0.0, 1.0);
    const auto test = blobs(rng, 2, 250, 0.0, 1.0);
    LdaModel lda;
    lda.fit(train.x, train.y);
    int ok = 0;
    for (std::size_t i = 0; i < test.x.size(); ++i) ok += lda.predict(test.x[i]) == test.y[i];
    EXPECT_LE(ok / 500.0, 0.6);
}

TEST(Lda, SeparableTrainingSet) {
    Rng rng(25);
    const auto train = blobs(rng, 5, 40, 5.0, 0.3, 4);
    LdaModel lda;
    lda.fit(train.x, train.y);
    for (std::size_t i = 0; i < train.x.size(); ++i) EXPECT_EQ(lda.predict(train.x[i]), train.y[i]);
}

TEST(Lda, InvariantUnderTranslation) {
    Rng rng(26);
    auto train = blobs(rng, 3, 30, 1.0, 1.0, 3);
    auto test = blobs(rng, 3, 30, 1.0, 1.0, 3);
    LdaModel a;
    a.fit(train.x, train.y);
    std::vector<int> before;
    for (const auto& q : test.x) before.push_back(a.predict(q));
    const std::vector<double> shift{100.0, -50.0, 7.0};
    for (auto* set : {&train, &test})
        for (auto& row : set->x)
            for (std::size_t j = 0; j < 3; ++j) row[j] += shift[j];
    LdaModel b;
    b.fit(train.x, train.y);
    for (std::size_t i = 0; i < test.x.size(); ++i) EXPECT_EQ(b.predict(test.x[i]), before[i]);
}

TEST(Lda, Errors) {
    EXPECT_EQ(kind_of([] { LdaModel().predict(std::vector<double>{0.0}); }), ErrorKind::NotFitted);
    const std::vector<std::vector<double>> one_class{{0.0}, {1.0}, {2.0}};
    EXPECT_EQ(kind_of([&] { LdaModel().fit(one_class, std::vector<int>{1, 1, 1}); }), ErrorKind::DegenerateData);
    const std::vector<std::vector<double>> constant{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}};
    EXPECT_EQ(kind_of([&] { LdaModel().fit(constant, std::vector<int>{0, 0, 1, 1}); }), ErrorKind::DegenerateData);
    const std::vector<std::vector<double>> too_few{{0.0, 1.0}, {1.0, 0.0}};
    EXPECT_EQ(kind_of([&] { LdaModel().fit(too_few, std::vector<int>{0, 1}); }), ErrorKind::DegenerateData);
}

TEST(RunBaselines, Deterministic) {
    Rng rng(27);
    data::WindowedDataset train, test;
    for (auto* ds : {&train, &test}) {
        const auto b = blobs(rng, 3, 40, 2.0, 1.0, 4);
        ds->inputs = b.x;
        ds->labels = b.y;
    }
    const auto a = run_baselines(train, test);
    const auto b = run_baselines(train, test);
    EXPECT_EQ(a.knn_accuracy, b.knn_accuracy);
    EXPECT_EQ(a.lda_accuracy, b.lda_accuracy);
    EXPECT_GT(a.knn_accuracy, 0.5);
    EXPECT_GT(a.lda_accuracy, 0.5);
    EXPECT_EQ(kind_of([&] { run_baselines(train, {}); }), ErrorKind::EmptyOutput);
}

}  // namespace
