#include "dlpr/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dlpr/error.hpp"
#include "dlpr/parallel.hpp"

namespace dlpr::nn {
namespace {

void expect_rank(const Tensor& x, std::size_t rank, const char* layer) {
    if (x.rank() != rank)
        throw Error(ErrorKind::ShapeError, std::string(layer) + " expects rank " + std::to_string(rank) +
                                               " input, got " + shape_string(x.shape()));
}

void expect_same_shape(const Tensor& a, const Shape& b, const char* layer) {
    if (a.shape() != b)
        throw Error(ErrorKind::ShapeError, std::string(layer) + " gradient shape " + shape_string(a.shape()) +
                                               " != " + shape_string(b));
}

[[noreturn]] void missing_cache(const char* layer) {
    throw Error(ErrorKind::StateError, std::string(layer) + " backward called without a cached forward pass");
}

void he_uniform(Tensor& w, std::size_t fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : w.values()) v = rng.uniform(-limit, limit);
}

}  // namespace

nlohmann::json Layer::describe() const { return {{"kind", kind()}}; }

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_maps, std::size_t kernel)
    : in_channels_(in_channels), out_maps_(out_maps), kernel_(kernel) {
    if (kernel < 1 || in_channels < 1 || out_maps < 1) throw Error(ErrorKind::ShapeError, "bad conv1d dimensions");
    weight_ = {"weight", Tensor({out_maps, in_channels, kernel}), Tensor({out_maps, in_channels, kernel})};
    bias_ = {"bias", Tensor({out_maps}), Tensor({out_maps})};
}

void Conv1d::init_he_uniform(Rng& rng) {
    he_uniform(weight_.value, in_channels_ * kernel_, rng);
    bias_.value.fill(0.0);
}

Shape Conv1d::output_shape(const Shape& in) const {
    if (in.size() != 3 || in[1] != in_channels_)
        throw Error(ErrorKind::ShapeError, "conv1d expects [N x " + std::to_string(in_channels_) + " x L], got " +
                                               shape_string(in));
    if (in[2] < kernel_)
        throw Error(ErrorKind::ShapeError, "conv1d kernel " + std::to_string(kernel_) + " longer than input length " +
                                               std::to_string(in[2]));
    return {in[0], out_maps_, in[2] - kernel_ + 1};
}

nlohmann::json Conv1d::describe() const {
    return {{"kind", kind()}, {"in_channels", in_channels_}, {"out_maps", out_maps_}, {"kernel", kernel_}};
}

Tensor Conv1d::infer(const Tensor& x) const {
    const Shape out_shape = output_shape(x.shape());
    Tensor y(out_shape);
    const std::size_t len = x.dim(2), out_len = out_shape[2];
    const double* w = weight_.value.data();
    const double* b = bias_.value.data();
    parallel_for(x.dim(0), [&](std::size_t n) {
        const double* xn = x.data() + n * in_channels_ * len;
        double* yn = y.data() + n * out_maps_ * out_len;
        for (std::size_t m = 0; m < out_maps_; ++m) {
            double* ym = yn + m * out_len;
            for (std::size_t j = 0; j < out_len; ++j) ym[j] = b[m];
            for (std::size_t i = 0; i < in_channels_; ++i) {
                const double* wi = w + (m * in_channels_ + i) * kernel_;
                const double* xi = xn + i * len;
                for (std::size_t j = 0; j < out_len; ++j) {
                    double acc = 0.0;
                    for (std::size_t t = 0; t < kernel_; ++t) acc += xi[j + t] * wi[t];
                    ym[j] += acc;
                }
            }
        }
    });
    return y;
}

Tensor Conv1d::forward(const Tensor& x) {
    Tensor y = infer(x);
    input_ = x;
    return y;
}

Tensor Conv1d::backward(const Tensor& dy) {
    if (!input_) missing_cache("conv1d");
    const Tensor& x = *input_;
    expect_same_shape(dy, output_shape(x.shape()), "conv1d");
    const std::size_t batch = x.dim(0), len = x.dim(2), out_len = dy.dim(2);

    weight_.grad.fill(0.0);
    bias_.grad.fill(0.0);
    double* dw = weight_.grad.data();
    double* db = bias_.grad.data();
    // Parameter gradients are reduced over the batch in sample order.
    for (std::size_t n = 0; n < batch; ++n) {
        const double* xn = x.data() + n * in_channels_ * len;
        const double* gn = dy.data() + n * out_maps_ * out_len;
        for (std::size_t m = 0; m < out_maps_; ++m) {
            const double* gm = gn + m * out_len;
            double s = 0.0;
            for (std::size_t j = 0; j < out_len; ++j) s += gm[j];
            db[m] += s;
            for (std::size_t i = 0; i < in_channels_; ++i) {
                const double* xi = xn + i * len;
                double* dwi = dw + (m * in_channels_ + i) * kernel_;
                for (std::size_t t = 0; t < kernel_; ++t) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < out_len; ++j) acc += gm[j] * xi[j + t];
                    dwi[t] += acc;
                }
            }
        }
    }

    Tensor dx(x.shape());
    const double* w = weight_.value.data();
    parallel_for(batch, [&](std::size_t n) {
        const double* gn = dy.data() + n * out_maps_ * out_len;
        double* dxn = dx.data() + n * in_channels_ * len;
        for (std::size_t m = 0; m < out_maps_; ++m) {
            const double* gm = gn + m * out_len;
            for (std::size_t i = 0; i < in_channels_; ++i) {
                const double* wi = w + (m * in_channels_ + i) * kernel_;
                double* dxi = dxn + i * len;
                for (std::size_t j = 0; j < out_len; ++j) {
                    const double g = gm[j];
                    for (std::size_t t = 0; t < kernel_; ++t) dxi[j + t] += g * wi[t];
                }
            }
        }
    });
    return dx;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::size_t in_features, std::size_t out_features) : in_(in_features), out_(out_features) {
    if (in_ < 1 || out_ < 1) throw Error(ErrorKind::ShapeError, "bad dense dimensions");
    weight_ = {"weight", Tensor({out_, in_}), Tensor({out_, in_})};
    bias_ = {"bias", Tensor({out_}), Tensor({out_})};
}

void Dense::init_he_uniform(Rng& rng) {
    he_uniform(weight_.value, in_, rng);
    bias_.value.fill(0.0);
}

Shape Dense::output_shape(const Shape& in) const {
    if (in.size() != 2 || in[1] != in_)
        throw Error(ErrorKind::ShapeError, "dense expects [N x " + std::to_string(in_) + "], got " + shape_string(in));
    return {in[0], out_};
}

nlohmann::json Dense::describe() const { return {{"kind", kind()}, {"in", in_}, {"out", out_}}; }

Tensor Dense::infer(const Tensor& x) const {
    Tensor y(output_shape(x.shape()));
    const double* w = weight_.value.data();
    const double* b = bias_.value.data();
    parallel_for(x.dim(0), [&](std::size_t n) {
        const double* xn = x.data() + n * in_;
        double* yn = y.data() + n * out_;
        for (std::size_t o = 0; o < out_; ++o) {
            const double* wo = w + o * in_;
            double acc = b[o];
            for (std::size_t i = 0; i < in_; ++i) acc += wo[i] * xn[i];
            yn[o] = acc;
        }
    });
    return y;
}

Tensor Dense::forward(const Tensor& x) {
    Tensor y = infer(x);
    input_ = x;
    return y;
}

Tensor Dense::backward(const Tensor& dy) {
    if (!input_) missing_cache("dense");
    const Tensor& x = *input_;
    expect_same_shape(dy, output_shape(x.shape()), "dense");
    const std::size_t batch = x.dim(0);

    weight_.grad.fill(0.0);
    bias_.grad.fill(0.0);
    double* dw = weight_.grad.data();
    double* db = bias_.grad.data();
    for (std::size_t n = 0; n < batch; ++n) {
        const double* xn = x.data() + n * in_;
        const double* gn = dy.data() + n * out_;
        for (std::size_t o = 0; o < out_; ++o) {
            const double g = gn[o];
            db[o] += g;
            double* dwo = dw + o * in_;
            for (std::size_t i = 0; i < in_; ++i) dwo[i] += g * xn[i];
        }
    }

    Tensor dx(x.shape());
    const double* w = weight_.value.data();
    parallel_for(batch, [&](std::size_t n) {
        const double* gn = dy.data() + n * out_;
        double* dxn = dx.data() + n * in_;
        for (std::size_t o = 0; o < out_; ++o) {
            const double g = gn[o];
            const double* wo = w + o * in_;
            for (std::size_t i = 0; i < in_; ++i) dxn[i] += g * wo[i];
        }
    });
    return dx;
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::size_t features)
    : features_(features), running_mean_({features}, 0.0), running_var_({features}, 1.0) {
    gamma_ = {"gamma", Tensor({features}, 1.0), Tensor({features})};
    beta_ = {"beta", Tensor({features}, 0.0), Tensor({features})};
}

Shape BatchNorm::output_shape(const Shape& in) const {
    if ((in.size() != 2 && in.size() != 3) || in[1] != features_)
        throw Error(ErrorKind::ShapeError, "batchnorm over " + std::to_string(features_) + " features got " +
                                               shape_string(in));
    return in;
}

nlohmann::json BatchNorm::describe() const {
    return {{"kind", kind()}, {"features", features_}, {"momentum", kMomentum}, {"eps", kEps}};
}

namespace {

// Feature f of sample n spans `inner` contiguous values.
struct FeatureLayout {
    std::size_t batch, features, inner;

    explicit FeatureLayout(const Tensor& x)
        : batch(x.dim(0)), features(x.dim(1)), inner(x.rank() == 3 ? x.dim(2) : 1) {}

    std::size_t offset(std::size_t n, std::size_t f) const { return (n * features + f) * inner; }
    std::size_t count() const { return batch * inner; }
};

}  // namespace

Tensor BatchNorm::forward(const Tensor& x) {
    output_shape(x.shape());
    const FeatureLayout lay(x);
    if (lay.batch < 2)
        throw Error(ErrorKind::BatchTooSmall, "batchnorm training needs at least 2 samples, got " +
                                                  std::to_string(lay.batch));
    const double m = static_cast<double>(lay.count());

    Cache cache{Tensor(x.shape()), std::vector<double>(features_)};
    Tensor y(x.shape());
    for (std::size_t f = 0; f < features_; ++f) {
        double mean = 0.0;
        for (std::size_t n = 0; n < lay.batch; ++n) {
            const double* p = x.data() + lay.offset(n, f);
            for (std::size_t j = 0; j < lay.inner; ++j) mean += p[j];
        }
        mean /= m;
        double var = 0.0;
        for (std::size_t n = 0; n < lay.batch; ++n) {
            const double* p = x.data() + lay.offset(n, f);
            for (std::size_t j = 0; j < lay.inner; ++j) var += (p[j] - mean) * (p[j] - mean);
        }
        var /= m;
        const double inv_std = 1.0 / std::sqrt(var + kEps);
        cache.inv_std[f] = inv_std;
        const double g = gamma_.value[f], b = beta_.value[f];
        for (std::size_t n = 0; n < lay.batch; ++n) {
            const std::size_t off = lay.offset(n, f);
            for (std::size_t j = 0; j < lay.inner; ++j) {
                const double xhat = (x[off + j] - mean) * inv_std;
                cache.normalized[off + j] = xhat;
                y[off + j] = g * xhat + b;
            }
        }
        // Running variance uses the unbiased estimate.
        running_mean_[f] = kMomentum * running_mean_[f] + (1.0 - kMomentum) * mean;
        running_var_[f] = kMomentum * running_var_[f] + (1.0 - kMomentum) * var * m / (m - 1.0);
    }
    cache_ = std::move(cache);
    return y;
}

Tensor BatchNorm::infer(const Tensor& x) const {
    output_shape(x.shape());
    const FeatureLayout lay(x);
    Tensor y(x.shape());
    for (std::size_t f = 0; f < features_; ++f) {
        const double inv_std = 1.0 / std::sqrt(running_var_[f] + kEps);
        const double scale = gamma_.value[f] * inv_std;
        const double shift = beta_.value[f] - running_mean_[f] * scale;
        for (std::size_t n = 0; n < lay.batch; ++n) {
            const std::size_t off = lay.offset(n, f);
            for (std::size_t j = 0; j < lay.inner; ++j) y[off + j] = x[off + j] * scale + shift;
        }
    }
    return y;
}

Tensor BatchNorm::backward(const Tensor& dy) {
    if (!cache_) missing_cache("batchnorm");
    const Cache& c = *cache_;
    expect_same_shape(dy, c.normalized.shape(), "batchnorm");
    const FeatureLayout lay(dy);
    const double m = static_cast<double>(lay.count());

    Tensor dx(dy.shape());
    for (std::size_t f = 0; f < features_; ++f) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t n = 0; n < lay.batch; ++n) {
            const std::size_t off = lay.offset(n, f);
            for (std::size_t j = 0; j < lay.inner; ++j) {
                sum_dy += dy[off + j];
                sum_dy_xhat += dy[off + j] * c.normalized[off + j];
            }
        }
        gamma_.grad[f] = sum_dy_xhat;
        beta_.grad[f] = sum_dy;
        const double k = gamma_.value[f] * c.inv_std[f] / m;
        for (std::size_t n = 0; n < lay.batch; ++n) {
            const std::size_t off = lay.offset(n, f);
            for (std::size_t j = 0; j < lay.inner; ++j)
                dx[off + j] = k * (m * dy[off + j] - sum_dy - c.normalized[off + j] * sum_dy_xhat);
        }
    }
    return dx;
}

// ---------------------------------------------------------------- ReLU

Tensor ReLU::infer(const Tensor& x) const {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

Tensor ReLU::forward(const Tensor& x) {
    input_ = x;
    return infer(x);
}

Tensor ReLU::backward(const Tensor& dy) {
    if (!input_) missing_cache("relu");
    expect_same_shape(dy, input_->shape(), "relu");
    Tensor dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = (*input_)[i] > 0.0 ? dy[i] : 0.0;
    return dx;
}

// ---------------------------------------------------------------- MaxPool1d

Shape MaxPool1d::output_shape(const Shape& in) const {
    if (in.size() != 3) throw Error(ErrorKind::ShapeError, "maxpool1d expects [N x C x L], got " + shape_string(in));
    if (in[2] % size_ != 0)
        throw Error(ErrorKind::PoolError, "maxpool1d size " + std::to_string(size_) + " does not divide length " +
                                              std::to_string(in[2]));
    return {in[0], in[1], in[2] / size_};
}

nlohmann::json MaxPool1d::describe() const { return {{"kind", kind()}, {"size", size_}}; }

Tensor MaxPool1d::infer(const Tensor& x) const {
    Tensor y(output_shape(x.shape()));
    for (std::size_t o = 0; o < y.size(); ++o) {
        const double* p = x.data() + o * size_;
        y[o] = *std::max_element(p, p + size_);
    }
    return y;
}

Tensor MaxPool1d::forward(const Tensor& x) {
    Tensor y(output_shape(x.shape()));
    std::vector<std::size_t> argmax(y.size());
    for (std::size_t o = 0; o < y.size(); ++o) {
        const double* p = x.data() + o * size_;
        // First maximum wins ties.
        const auto idx = static_cast<std::size_t>(std::max_element(p, p + size_) - p);
        argmax[o] = o * size_ + idx;
        y[o] = p[idx];
    }
    input_shape_ = x.shape();
    argmax_ = std::move(argmax);
    return y;
}

Tensor MaxPool1d::backward(const Tensor& dy) {
    if (!argmax_) missing_cache("maxpool1d");
    expect_same_shape(dy, output_shape(input_shape_), "maxpool1d");
    Tensor dx(input_shape_);
    for (std::size_t o = 0; o < dy.size(); ++o) dx[(*argmax_)[o]] += dy[o];
    return dx;
}

// ---------------------------------------------------------------- GlobalAvgPool

Shape GlobalAvgPool::output_shape(const Shape& in) const {
    if (in.size() != 3)
        throw Error(ErrorKind::ShapeError, "global_avg_pool expects [N x C x L], got " + shape_string(in));
    return {in[0], in[1]};
}

Tensor GlobalAvgPool::infer(const Tensor& x) const {
    Tensor y(output_shape(x.shape()));
    const std::size_t len = x.dim(2);
    for (std::size_t o = 0; o < y.size(); ++o) {
        const double* p = x.data() + o * len;
        double s = 0.0;
        for (std::size_t j = 0; j < len; ++j) s += p[j];
        y[o] = s / static_cast<double>(len);
    }
    return y;
}

Tensor GlobalAvgPool::forward(const Tensor& x) {
    input_shape_ = x.shape();
    return infer(x);
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
    if (!input_shape_) missing_cache("global_avg_pool");
    expect_same_shape(dy, output_shape(*input_shape_), "global_avg_pool");
    Tensor dx(*input_shape_);
    const std::size_t len = dx.dim(2);
    for (std::size_t o = 0; o < dy.size(); ++o) {
        const double g = dy[o] / static_cast<double>(len);
        for (std::size_t j = 0; j < len; ++j) dx[o * len + j] = g;
    }
    return dx;
}

// ---------------------------------------------------------------- softmax / loss

Tensor softmax(const Tensor& logits) {
    expect_rank(logits, 2, "softmax");
    Tensor p(logits.shape());
    const std::size_t k = logits.dim(1);
    for (std::size_t n = 0; n < logits.dim(0); ++n) {
        const double* z = logits.data() + n * k;
        double* pn = p.data() + n * k;
        const double zmax = *std::max_element(z, z + k);
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += (pn[i] = std::exp(z[i] - zmax));
        for (std::size_t i = 0; i < k; ++i) pn[i] /= s;
    }
    return p;
}

namespace {

void check_labels(const Tensor& probs, std::span<const int> labels) {
    expect_rank(probs, 2, "cross_entropy");
    if (labels.size() != probs.dim(0))
        throw Error(ErrorKind::ShapeError, "label count does not match batch size");
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= probs.dim(1))
            throw Error(ErrorKind::ConfigError, "label " + std::to_string(l) + " outside the model's " +
                                                    std::to_string(probs.dim(1)) + " classes");
}

}  // namespace

double cross_entropy(const Tensor& probs, std::span<const int> labels) {
    check_labels(probs, labels);
    double loss = 0.0;
    for (std::size_t n = 0; n < labels.size(); ++n) {
        const double p = probs.at(n, static_cast<std::size_t>(labels[n]));
        loss -= std::log(std::max(p, std::numeric_limits<double>::min()));
    }
    return loss / static_cast<double>(labels.size());
}

Tensor softmax_cross_entropy_grad(const Tensor& probs, std::span<const int> labels) {
    check_labels(probs, labels);
    Tensor g = probs;
    const double inv_n = 1.0 / static_cast<double>(labels.size());
    for (std::size_t n = 0; n < labels.size(); ++n) g.at(n, static_cast<std::size_t>(labels[n])) -= 1.0;
    for (double& v : g.values()) v *= inv_n;
    return g;
}

}  // namespace dlpr::nn
