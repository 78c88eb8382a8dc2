#pragma once

// k-nearest-neighbour and linear discriminant classifiers for the
// time-domain feature baselines.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dlpr/dataio.hpp"

namespace dlpr::baselines {

class KnnModel {
public:
    explicit KnnModel(std::size_t k = 5) : k_(k) {}

    // k must be odd and no larger than the training set.
    void fit(std::span<const std::vector<double>> x, std::span<const int> y);
    int predict(std::span<const double> query) const;
    std::size_t k() const { return k_; }

private:
    std::size_t k_;
    std::vector<std::vector<double>> x_;
    std::vector<int> y_;
};

enum class Priors { Equal, Empirical };

class LdaModel {
public:
    explicit LdaModel(Priors priors = Priors::Empirical) : priors_(priors) {}

    // Pooled within-class covariance with diagonal shrinkage 1e-4 * trace / dim.
    void fit(std::span<const std::vector<double>> x, std::span<const int> y);
    int predict(std::span<const double> query) const;
    std::vector<double> scores(std::span<const double> query) const;

    const std::vector<int>& classes() const { return classes_; }

private:
    Priors priors_;
    std::vector<int> classes_;
    Eigen::MatrixXd means_;         // one row per class
    Eigen::MatrixXd coefficients_;  // Sigma^-1 mu_c, one row per class
    Eigen::VectorXd intercepts_;
};

struct BaselineResult {
    double knn_accuracy = 0.0;
    double lda_accuracy = 0.0;
};

// z-scores with training statistics, then fits and scores both classifiers.
BaselineResult run_baselines(const data::WindowedDataset& train, const data::WindowedDataset& test,
                             std::size_t k = 5, Priors priors = Priors::Empirical);

}  // namespace dlpr::baselines
