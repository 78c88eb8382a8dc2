#include "dlpr/nn/model.hpp"

#include <algorithm>
#include <cmath>

#include "dlpr/error.hpp"
#include "dlpr/rng.hpp"

namespace dlpr::nn {

ModelSpec ModelSpec::canonical(std::size_t input_length, std::size_t num_classes) {
    ModelSpec s;
    s.input_length = input_length;
    s.num_classes = num_classes;
    return s;
}

ModelSpec ModelSpec::compact(std::size_t input_length, std::size_t num_classes) {
    ModelSpec s = canonical(input_length, num_classes);
    s.conv1.kernel = 3;
    s.conv2.kernel = 3;
    s.conv3.kernel = 2;
    return s;
}

ModelSpec ModelSpec::for_input(std::size_t input_length, std::size_t num_classes) {
    ModelSpec s = canonical(input_length, num_classes);
    try {
        s.length_chain();
        return s;
    } catch (const Error&) {
        return compact(input_length, num_classes);
    }
}

ModelSpec ModelSpec::toy(std::size_t num_classes) {
    ModelSpec s;
    s.input_length = 8;
    s.num_classes = num_classes;
    s.conv1 = {4, 3};
    s.conv2 = {4, 3};
    s.conv3 = {4, 2};
    s.fc1 = 64;
    s.fc2 = 64;
    return s;
}

std::vector<std::size_t> ModelSpec::length_chain() const {
    if (num_classes < 2) throw Error(ErrorKind::ConfigError, "model needs at least 2 classes");
    if (pool < 1) throw Error(ErrorKind::ConfigError, "pool size must be positive");
    auto conv = [](std::size_t len, const ConvStage& c, const char* name) {
        if (c.kernel < 1 || c.filters < 1) throw Error(ErrorKind::ShapeError, std::string(name) + " is empty");
        if (len < c.kernel)
            throw Error(ErrorKind::ShapeError, std::string(name) + " kernel " + std::to_string(c.kernel) +
                                                   " exceeds length " + std::to_string(len));
        return len - c.kernel + 1;
    };
    const std::size_t l1 = conv(input_length, conv1, "conv1");
    const std::size_t l2 = conv(l1, conv2, "conv2");
    if (l2 % pool != 0)
        throw Error(ErrorKind::PoolError, "conv2 output length " + std::to_string(l2) + " not divisible by pool " +
                                              std::to_string(pool));
    const std::size_t lp = l2 / pool;
    const std::size_t l3 = conv(lp, conv3, "conv3");
    return {l1, l2, lp, l3};
}

nlohmann::json ModelSpec::to_json() const {
    return {{"input_length", input_length},
            {"num_classes", num_classes},
            {"conv1", {conv1.filters, conv1.kernel}},
            {"conv2", {conv2.filters, conv2.kernel}},
            {"pool", pool},
            {"conv3", {conv3.filters, conv3.kernel}},
            {"fc1", fc1},
            {"fc2", fc2}};
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
    try {
        ModelSpec s;
        s.input_length = j.at("input_length").get<std::size_t>();
        s.num_classes = j.at("num_classes").get<std::size_t>();
        auto stage = [&](const char* key) {
            const auto& a = j.at(key);
            return ConvStage{a.at(0).get<std::size_t>(), a.at(1).get<std::size_t>()};
        };
        s.conv1 = stage("conv1");
        s.conv2 = stage("conv2");
        s.pool = j.at("pool").get<std::size_t>();
        s.conv3 = stage("conv3");
        s.fc1 = j.at("fc1").get<std::size_t>();
        s.fc2 = j.at("fc2").get<std::size_t>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("model spec: ") + e.what());
    }
}

Model::Model(const ModelSpec& spec, std::uint64_t seed) : spec_(spec) {
    spec_.length_chain();
    Rng rng(seed);

    auto conv = [&](std::size_t in, const ConvStage& c) {
        auto layer = std::make_unique<Conv1d>(in, c.filters, c.kernel);
        layer->init_he_uniform(rng);
        layers_.push_back(std::move(layer));
        layers_.push_back(std::make_unique<BatchNorm>(c.filters));
        layers_.push_back(std::make_unique<ReLU>());
    };
    auto dense = [&](std::size_t in, std::size_t out, bool normalize) {
        auto layer = std::make_unique<Dense>(in, out);
        layer->init_he_uniform(rng);
        layers_.push_back(std::move(layer));
        if (normalize) {
            layers_.push_back(std::make_unique<BatchNorm>(out));
            layers_.push_back(std::make_unique<ReLU>());
        }
    };

    conv(1, spec_.conv1);
    conv(spec_.conv1.filters, spec_.conv2);
    layers_.push_back(std::make_unique<MaxPool1d>(spec_.pool));
    conv(spec_.conv2.filters, spec_.conv3);
    layers_.push_back(std::make_unique<GlobalAvgPool>());
    dense(spec_.conv3.filters, spec_.fc1, true);
    dense(spec_.fc1, spec_.fc2, true);
    dense(spec_.fc2, spec_.num_classes, false);
}

Tensor Model::as_batch(const Tensor& x) const {
    if (x.rank() == 2 && x.dim(1) == spec_.input_length) return x.reshaped({x.dim(0), 1, spec_.input_length});
    if (x.rank() == 3 && x.dim(1) == 1 && x.dim(2) == spec_.input_length) return x;
    throw Error(ErrorKind::ShapeError, "model expects [N x " + std::to_string(spec_.input_length) + "] input, got " +
                                           shape_string(x.shape()));
}

Tensor Model::forward(const Tensor& x) {
    Tensor h = as_batch(x);
    for (auto& layer : layers_) h = layer->forward(h);
    return h;
}

Tensor Model::infer_logits(const Tensor& x) const {
    Tensor h = as_batch(x);
    for (const auto& layer : layers_) h = layer->infer(h);
    return h;
}

void Model::backward(const Tensor& dlogits) {
    Tensor g = dlogits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

Tensor Model::predict_proba(const Tensor& x) const { return softmax(infer_logits(x)); }

std::vector<int> Model::predict(const Tensor& x) const {
    const Tensor logits = infer_logits(x);
    const std::size_t k = logits.dim(1);
    std::vector<int> out(logits.dim(0));
    for (std::size_t n = 0; n < out.size(); ++n) {
        const double* z = logits.data() + n * k;
        out[n] = static_cast<int>(std::max_element(z, z + k) - z);
    }
    return out;
}

std::vector<LayerTrace> Model::trace_shapes(const Tensor& x) const {
    std::vector<LayerTrace> out;
    Tensor h = as_batch(x);
    for (const auto& layer : layers_) {
        h = layer->infer(h);
        out.push_back({layer->kind(), h.shape()});
    }
    return out;
}

std::vector<Parameter*> Model::parameters() {
    std::vector<Parameter*> out;
    for (auto& layer : layers_)
        for (Parameter* p : layer->parameters()) out.push_back(p);
    return out;
}

std::vector<Tensor*> Model::persistent_tensors() {
    std::vector<Tensor*> out;
    for (auto& layer : layers_) {
        for (Parameter* p : layer->parameters()) out.push_back(&p->value);
        for (Tensor* b : layer->buffers()) out.push_back(b);
    }
    return out;
}

std::vector<const Tensor*> Model::persistent_tensors() const {
    // Layer accessors are non-const; nothing is modified here.
    const auto mutable_list = const_cast<Model*>(this)->persistent_tensors();
    return {mutable_list.begin(), mutable_list.end()};
}

Dense& Model::classifier() { return static_cast<Dense&>(*layers_.back()); }

Tensor stack_rows(std::span<const std::vector<double>> rows) {
    if (rows.empty()) throw Error(ErrorKind::EmptyOutput, "no rows to stack");
    const std::size_t width = rows.front().size();
    std::vector<double> data;
    data.reserve(rows.size() * width);
    for (const auto& r : rows) {
        if (r.size() != width) throw Error(ErrorKind::ShapeError, "ragged input rows");
        data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor({rows.size(), width}, std::move(data));
}

void Adam::step(std::span<Parameter* const> params) {
    if (m_.empty()) {
        for (const Parameter* p : params) {
            m_.emplace_back(p->value.size(), 0.0);
            v_.emplace_back(p->value.size(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw Error(ErrorKind::StateError, "Adam parameter list changed between steps");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k];
        if (p.grad.size() != p.value.size() || m_[k].size() != p.value.size())
            throw Error(ErrorKind::StateError, "Adam accumulator shape mismatch for " + p.name);
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p.value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace dlpr::nn
