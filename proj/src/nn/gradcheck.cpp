#include "dlpr/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "dlpr/nn/layers.hpp"
#include "dlpr/nn/model.hpp"
#include "dlpr/rng.hpp"

namespace dlpr::nn {
namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = scale * rng.uniform(-1.0, 1.0);
    return t;
}

double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Compares analytic gradient entries with central differences of loss().
void compare(std::span<double> values, std::span<const double> analytic, const std::function<double()>& loss,
             GradCheckResult& result) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + kFdStep;
        const double up = loss();
        values[i] = saved - kFdStep;
        const double down = loss();
        values[i] = saved;
        const double numeric = (up - down) / (2.0 * kFdStep);
        result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic[i], numeric));
        ++result.checked;
    }
}

// loss(x) = <layer.forward(x), upstream>
GradCheckResult check_layer(const std::string& name, Layer& layer, Tensor x, Rng& rng) {
    GradCheckResult result{name};
    const Tensor probe = layer.forward(x);
    const Tensor upstream = random_tensor(probe.shape(), rng);
    const Tensor dx = layer.backward(upstream);

    std::vector<std::vector<double>> param_grads;
    for (Parameter* p : layer.parameters())
        param_grads.emplace_back(p->grad.values().begin(), p->grad.values().end());

    auto loss = [&] { return dot(layer.forward(x), upstream); };
    compare(x.values(), dx.values(), loss, result);
    const auto params = layer.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) compare(params[k]->value.values(), param_grads[k], loss, result);
    return result;
}

}  // namespace

double relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), kRelativeFloor});
    return std::abs(analytic - numeric) / scale;
}

GradCheckResult check_conv1d(std::uint64_t seed, std::size_t kernel) {
    Rng rng(seed);
    Conv1d conv(2, 3, kernel);
    conv.init_he_uniform(rng);
    for (double& b : conv.bias().value.values()) b = rng.uniform(-0.5, 0.5);
    return check_layer("conv1d", conv, random_tensor({3, 2, kernel + 6}, rng), rng);
}

GradCheckResult check_dense(std::uint64_t seed) {
    Rng rng(seed);
    Dense dense(5, 4);
    dense.init_he_uniform(rng);
    for (double& b : dense.bias().value.values()) b = rng.uniform(-0.5, 0.5);
    return check_layer("dense", dense, random_tensor({3, 5}, rng), rng);
}

GradCheckResult check_batchnorm_conv(std::uint64_t seed) {
    Rng rng(seed);
    BatchNorm bn(3);
    for (double& g : bn.gamma().value.values()) g = rng.uniform(0.5, 1.5);
    for (double& b : bn.beta().value.values()) b = rng.uniform(-0.5, 0.5);
    return check_layer("batchnorm[NxCxL]", bn, random_tensor({4, 3, 5}, rng), rng);
}

GradCheckResult check_batchnorm_dense(std::uint64_t seed) {
    Rng rng(seed);
    BatchNorm bn(4);
    for (double& g : bn.gamma().value.values()) g = rng.uniform(0.5, 1.5);
    for (double& b : bn.beta().value.values()) b = rng.uniform(-0.5, 0.5);
    return check_layer("batchnorm[NxF]", bn, random_tensor({5, 4}, rng), rng);
}

GradCheckResult check_relu(std::uint64_t seed) {
    Rng rng(seed);
    ReLU relu;
    // Keep inputs away from the kink so +-h never crosses it.
    Tensor x({3, 2, 6});
    for (double& v : x.values()) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
    return check_layer("relu", relu, std::move(x), rng);
}

GradCheckResult check_maxpool(std::uint64_t seed) {
    Rng rng(seed);
    MaxPool1d pool(2);
    // Distinct values separated by far more than h.
    Tensor x({2, 3, 8});
    std::vector<double> levels(x.size());
    for (std::size_t i = 0; i < levels.size(); ++i) levels[i] = 0.1 * static_cast<double>(i);
    rng.shuffle(std::span(levels));
    std::copy(levels.begin(), levels.end(), x.values().begin());
    return check_layer("maxpool1d", pool, std::move(x), rng);
}

GradCheckResult check_global_avg_pool(std::uint64_t seed) {
    Rng rng(seed);
    GlobalAvgPool gap;
    return check_layer("global_avg_pool", gap, random_tensor({3, 4, 5}, rng), rng);
}

GradCheckResult check_softmax_cross_entropy(std::uint64_t seed) {
    Rng rng(seed);
    GradCheckResult result{"softmax_cross_entropy"};
    Tensor logits = random_tensor({4, 5}, rng, 2.0);
    std::vector<int> labels(4);
    for (int& l : labels) l = static_cast<int>(rng.below(5));
    const Tensor grad = softmax_cross_entropy_grad(softmax(logits), labels);
    compare(logits.values(), grad.values(), [&] { return cross_entropy(softmax(logits), labels); }, result);
    return result;
}

GradCheckResult check_toy_model(std::uint64_t seed) {
    Rng rng(seed);
    GradCheckResult result{"toy_model", 0.0, 0, kModelTolerance};
    Model model(ModelSpec::toy(4), seed);
    for (Parameter* p : model.parameters())
        if (p->name == "bias" || p->name == "beta")
            for (double& v : p->value.values()) v = rng.uniform(-0.2, 0.2);

    Tensor x = random_tensor({6, 8}, rng);
    std::vector<int> labels(6);
    for (int& l : labels) l = static_cast<int>(rng.below(4));

    auto loss = [&] { return cross_entropy(softmax(model.forward(x)), labels); };
    const Tensor probs = softmax(model.forward(x));
    model.backward(softmax_cross_entropy_grad(probs, labels));

    const auto params = model.parameters();
    std::vector<std::vector<double>> grads;
    for (Parameter* p : params) grads.emplace_back(p->grad.values().begin(), p->grad.values().end());
    for (std::size_t k = 0; k < params.size(); ++k) compare(params[k]->value.values(), grads[k], loss, result);
    return result;
}

std::vector<GradCheckResult> run_gradchecks(std::uint64_t seed) {
    return {
        check_conv1d(seed),
        check_batchnorm_conv(seed + 1),
        check_batchnorm_dense(seed + 2),
        check_relu(seed + 3),
        check_maxpool(seed + 4),
        check_global_avg_pool(seed + 5),
        check_dense(seed + 6),
        check_softmax_cross_entropy(seed + 7),
        check_toy_model(seed + 8),
    };
}

}  // namespace dlpr::nn
