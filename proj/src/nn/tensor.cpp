#include "dlpr/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "dlpr/error.hpp"

namespace dlpr::nn {
namespace {

std::size_t element_count(const Shape& shape) {
    if (shape.empty() || shape.size() > 3)
        throw Error(ErrorKind::ShapeError, "tensor rank must be 1..3, got " + std::to_string(shape.size()));
    for (std::size_t d : shape)
        if (d == 0) throw Error(ErrorKind::ShapeError, "zero-sized dimension in " + shape_string(shape));
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_string(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_))
        throw Error(ErrorKind::ShapeError, "data length " + std::to_string(data_.size()) + " does not match shape " +
                                               shape_string(shape_));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

}  // namespace dlpr::nn
