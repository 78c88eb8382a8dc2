#pragma once

// The DLPR network: three valid-mode convolutions with batch normalization and
// ReLU, a max pool between the second and third, global average pooling, two
// fully connected blocks and a softmax classifier.
//
//   Conv(128,k7) BN ReLU  Conv(128,k5) BN ReLU  MaxPool(2)
//   Conv(64,k3) BN ReLU   GAP  FC(512) BN ReLU  FC(128) BN ReLU  FC(K)  Softmax

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dlpr/nn/layers.hpp"
#include "dlpr/nn/tensor.hpp"

namespace dlpr::nn {

struct ConvStage {
    std::size_t filters = 0;
    std::size_t kernel = 0;

    bool operator==(const ConvStage&) const = default;
};

struct ModelSpec {
    std::size_t input_length = 24;
    std::size_t num_classes = 2;
    ConvStage conv1{128, 7};
    ConvStage conv2{128, 5};
    std::size_t pool = 2;
    ConvStage conv3{64, 3};
    std::size_t fc1 = 512;
    std::size_t fc2 = 128;

    bool operator==(const ModelSpec&) const = default;

    // Kernels 7/5/3 with a pool of 2: the reference architecture.
    static ModelSpec canonical(std::size_t input_length, std::size_t num_classes);
    // Same widths, kernels 3/3/2, for inputs shorter than the canonical chain accepts (2C < 16).
    static ModelSpec compact(std::size_t input_length, std::size_t num_classes);
    // Canonical when the input admits it, otherwise compact.
    static ModelSpec for_input(std::size_t input_length, std::size_t num_classes);
    // Input 8, four filters per convolution, FC widths 64: used for gradient checks and the overfit fixture.
    static ModelSpec toy(std::size_t num_classes);

    // Per-sample length after conv1, conv2, pool and conv3. Throws ShapeError or
    // PoolError when the chain is not realizable.
    std::vector<std::size_t> length_chain() const;

    nlohmann::json to_json() const;
    static ModelSpec from_json(const nlohmann::json& j);
};

struct LayerTrace {
    std::string kind;
    Shape output;
};

class Model {
public:
    // Builds the layer stack and draws He-uniform weights from seed.
    Model(const ModelSpec& spec, std::uint64_t seed);

    Model(Model&&) noexcept = default;
    Model& operator=(Model&&) noexcept = default;

    const ModelSpec& spec() const { return spec_; }

    // x is [N x L] or [N x 1 x L]; returns [N x K] logits.
    Tensor forward(const Tensor& x);
    Tensor infer_logits(const Tensor& x) const;
    void backward(const Tensor& dlogits);

    Tensor predict_proba(const Tensor& x) const;
    // argmax with the lowest index winning ties.
    std::vector<int> predict(const Tensor& x) const;

    // Inference-mode output shape of every layer.
    std::vector<LayerTrace> trace_shapes(const Tensor& x) const;

    std::vector<Parameter*> parameters();
    // Serialization order: per layer, parameters then buffers.
    std::vector<Tensor*> persistent_tensors();
    std::vector<const Tensor*> persistent_tensors() const;
    std::vector<std::unique_ptr<Layer>>& layers() { return layers_; }
    const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

    // Final dense layer (weights and bias).
    Dense& classifier();

private:
    Tensor as_batch(const Tensor& x) const;

    ModelSpec spec_;
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Builds a [N x L] tensor from equal-length rows.
Tensor stack_rows(std::span<const std::vector<double>> rows);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(std::span<Parameter* const> params);
    std::size_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace dlpr::nn
