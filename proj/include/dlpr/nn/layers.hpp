#pragma once

// Layer kernels. Activations carry the batch as their leading dimension:
// [N x C x L] for the convolutional trunk and [N x F] after pooling.
//
// forward() is the training path: it caches what backward() needs and, for
// batch normalization, uses batch statistics. infer() is const, uses running
// statistics and touches no shared state, so a finalized model can be
// evaluated from several threads at once.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dlpr/nn/tensor.hpp"
#include "dlpr/rng.hpp"

namespace dlpr::nn {

class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string kind() const = 0;
    virtual Tensor forward(const Tensor& x) = 0;
    virtual Tensor infer(const Tensor& x) const = 0;
    // Writes parameter gradients (overwriting) and returns dL/dx.
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual nlohmann::json describe() const;

    virtual std::vector<Parameter*> parameters() { return {}; }
    // Non-learned persistent tensors (running statistics).
    virtual std::vector<Tensor*> buffers() { return {}; }
};

// Valid-mode, stride-1 1-D convolution.
class Conv1d final : public Layer {
public:
    Conv1d(std::size_t in_channels, std::size_t out_maps, std::size_t kernel);

    std::string kind() const override { return "conv1d"; }
    Tensor forward(const Tensor& x) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    Shape output_shape(const Shape& in) const override;
    nlohmann::json describe() const override;
    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }

    void init_he_uniform(Rng& rng);
    Parameter& weight() { return weight_; }  // [out_maps x in_channels x kernel]
    Parameter& bias() { return bias_; }      // [out_maps]

private:
    std::size_t in_channels_, out_maps_, kernel_;
    Parameter weight_, bias_;
    std::optional<Tensor> input_;
};

// Fully connected: y = x W^T + b with W [out x in].
class Dense final : public Layer {
public:
    Dense(std::size_t in_features, std::size_t out_features);

    std::string kind() const override { return "dense"; }
    Tensor forward(const Tensor& x) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    Shape output_shape(const Shape& in) const override;
    nlohmann::json describe() const override;
    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }

    void init_he_uniform(Rng& rng);
    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }

private:
    std::size_t in_, out_;
    Parameter weight_, bias_;
    std::optional<Tensor> input_;
};

// Per-feature normalization. For [N x C x L] inputs statistics are taken over
// N and L for each of the C maps; for [N x F] over N for each feature.
class BatchNorm final : public Layer {
public:
    static constexpr double kMomentum = 0.9;
    static constexpr double kEps = 1e-5;

    explicit BatchNorm(std::size_t features);

    std::string kind() const override { return "batchnorm"; }
    Tensor forward(const Tensor& x) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    Shape output_shape(const Shape& in) const override;
    nlohmann::json describe() const override;
    std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
    std::vector<Tensor*> buffers() override { return {&running_mean_, &running_var_}; }

    Parameter& gamma() { return gamma_; }
    Parameter& beta() { return beta_; }
    const Tensor& running_mean() const { return running_mean_; }
    const Tensor& running_var() const { return running_var_; }

private:
    struct Cache {
        Tensor normalized;
        std::vector<double> inv_std;
    };

    std::size_t features_;
    Parameter gamma_, beta_;
    Tensor running_mean_, running_var_;
    std::optional<Cache> cache_;
};

class ReLU final : public Layer {
public:
    std::string kind() const override { return "relu"; }
    Tensor forward(const Tensor& x) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    Shape output_shape(const Shape& in) const override { return in; }

private:
    std::optional<Tensor> input_;
};

// Non-overlapping max pool along L; the input length must be a multiple of size.
class MaxPool1d final : public Layer {
public:
    explicit MaxPool1d(std::size_t size = 2) : size_(size) {}

    std::string kind() const override { return "maxpool1d"; }
    Tensor forward(const Tensor& x) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    Shape output_shape(const Shape& in) const override;
    nlohmann::json describe() const override;

private:
    std::size_t size_;
    Shape input_shape_;
    std::optional<std::vector<std::size_t>> argmax_;
};

// [N x C x L] -> [N x C], mean over L.
class GlobalAvgPool final : public Layer {
public:
    std::string kind() const override { return "global_avg_pool"; }
    Tensor forward(const Tensor& x) override;
    Tensor infer(const Tensor& x) const override;
    Tensor backward(const Tensor& dy) override;
    Shape output_shape(const Shape& in) const override;

private:
    std::optional<Shape> input_shape_;
};

// Row-wise softmax of [N x K] logits, max-shifted.
Tensor softmax(const Tensor& logits);

// Mean over the batch of -log p[label].
double cross_entropy(const Tensor& probs, std::span<const int> labels);

// d(mean cross entropy)/d(logits) = (p - onehot) / N.
Tensor softmax_cross_entropy_grad(const Tensor& probs, std::span<const int> labels);

}  // namespace dlpr::nn
