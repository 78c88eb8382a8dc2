#include "dlpr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "dlpr/error.hpp"

namespace dlpr::baselines {
namespace {

void check_training_set(std::span<const std::vector<double>> x, std::span<const int> y) {
    if (x.empty()) throw Error(ErrorKind::NotFitted, "empty training set");
    if (x.size() != y.size()) throw Error(ErrorKind::ShapeError, "feature and label counts differ");
    const std::size_t d = x.front().size();
    for (const auto& row : x)
        if (row.size() != d) throw Error(ErrorKind::ShapeError, "ragged feature matrix");
}

}  // namespace

void KnnModel::fit(std::span<const std::vector<double>> x, std::span<const int> y) {
    check_training_set(x, y);
    if (k_ == 0 || k_ % 2 == 0) throw Error(ErrorKind::ConfigError, "k must be a positive odd integer");
    if (k_ > x.size()) throw Error(ErrorKind::ConfigError, "k exceeds training set size");
    x_.assign(x.begin(), x.end());
    y_.assign(y.begin(), y.end());
}

int KnnModel::predict(std::span<const double> query) const {
    if (x_.empty()) throw Error(ErrorKind::NotFitted, "k-NN model has no training data");
    if (query.size() != x_.front().size()) throw Error(ErrorKind::ShapeError, "query dimension mismatch");

    std::vector<std::pair<double, std::size_t>> dist(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < query.size(); ++j) {
            const double d = x_[i][j] - query[j];
            s += d * d;
        }
        dist[i] = {s, i};
    }
    // Pair ordering breaks distance ties by training index.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());

    std::map<int, std::size_t> votes;
    for (std::size_t i = 0; i < k_; ++i) ++votes[y_[dist[i].second]];
    int best = votes.begin()->first;
    std::size_t best_votes = 0;
    for (const auto& [label, count] : votes)
        if (count > best_votes) {
            best = label;
            best_votes = count;
        }
    return best;
}

void LdaModel::fit(std::span<const std::vector<double>> x, std::span<const int> y) {
    check_training_set(x, y);
    const std::size_t d = x.front().size();
    if (x.size() < d + 1) throw Error(ErrorKind::DegenerateData, "LDA needs at least dim+1 samples");

    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < y.size(); ++i) members[y[i]].push_back(i);
    if (members.size() < 2) throw Error(ErrorKind::DegenerateData, "LDA needs at least 2 classes");

    const auto n_classes = static_cast<Eigen::Index>(members.size());
    const auto dim = static_cast<Eigen::Index>(d);
    classes_.clear();
    means_.setZero(n_classes, dim);
    Eigen::VectorXd log_prior(n_classes);
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(dim, dim);

    Eigen::Index c = 0;
    for (const auto& [label, idx] : members) {
        classes_.push_back(label);
        for (std::size_t i : idx) means_.row(c) += Eigen::Map<const Eigen::RowVectorXd>(x[i].data(), dim);
        means_.row(c) /= static_cast<double>(idx.size());
        for (std::size_t i : idx) {
            const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(x[i].data(), dim) - means_.row(c).transpose();
            scatter.noalias() += r * r.transpose();
        }
        log_prior(c) = priors_ == Priors::Equal
                           ? -std::log(static_cast<double>(n_classes))
                           : std::log(static_cast<double>(idx.size()) / static_cast<double>(x.size()));
        ++c;
    }

    const double dof = static_cast<double>(x.size()) - static_cast<double>(n_classes);
    Eigen::MatrixXd cov = scatter / std::max(dof, 1.0);
    const double trace = cov.trace();
    cov.diagonal().array() += 1e-4 * trace / static_cast<double>(d);

    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success || !(trace > 0.0))
        throw Error(ErrorKind::DegenerateData, "pooled covariance is singular after shrinkage");

    coefficients_ = llt.solve(means_.transpose()).transpose();
    intercepts_.resize(n_classes);
    for (Eigen::Index k = 0; k < n_classes; ++k)
        intercepts_(k) = -0.5 * means_.row(k).dot(coefficients_.row(k)) + log_prior(k);
}

std::vector<double> LdaModel::scores(std::span<const double> query) const {
    if (classes_.empty()) throw Error(ErrorKind::NotFitted, "LDA model is not fitted");
    if (static_cast<Eigen::Index>(query.size()) != means_.cols())
        throw Error(ErrorKind::ShapeError, "query dimension mismatch");
    const Eigen::Map<const Eigen::VectorXd> q(query.data(), static_cast<Eigen::Index>(query.size()));
    const Eigen::VectorXd s = coefficients_ * q + intercepts_;
    return {s.data(), s.data() + s.size()};
}

int LdaModel::predict(std::span<const double> query) const {
    const auto s = scores(query);
    // max_element returns the first maximum, i.e. the lowest class id.
    return classes_[static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin())];
}

BaselineResult run_baselines(const data::WindowedDataset& train, const data::WindowedDataset& test, std::size_t k,
                             Priors priors) {
    if (test.empty()) throw Error(ErrorKind::EmptyOutput, "empty test set");
    const auto z = data::ZScore::fit(train.inputs);
    auto xtr = train.inputs;
    auto xte = test.inputs;
    z.apply_inplace(xtr);
    z.apply_inplace(xte);

    KnnModel knn(k);
    knn.fit(xtr, train.labels);
    LdaModel lda(priors);
    lda.fit(xtr, train.labels);

    std::size_t knn_ok = 0, lda_ok = 0;
    for (std::size_t i = 0; i < xte.size(); ++i) {
        knn_ok += knn.predict(xte[i]) == test.labels[i];
        lda_ok += lda.predict(xte[i]) == test.labels[i];
    }
    const auto n = static_cast<double>(xte.size());
    return {static_cast<double>(knn_ok) / n, static_cast<double>(lda_ok) / n};
}

}  // namespace dlpr::baselines
