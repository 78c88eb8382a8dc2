#pragma once

// DLPRM1 model files:
//   "DLPRM1\0" | u64 LE header length | UTF-8 JSON header | f64 LE parameters
// Parameters follow layer order; within a layer weights precede biases and
// batch normalization stores gamma, beta, running mean, running variance.

#include <cstdint>
#include <filesystem>
#include <string>

#include "dlpr/dataio.hpp"
#include "dlpr/nn/model.hpp"

namespace dlpr::nn {

struct TrainedModel {
    Model net;
    data::ZScore normalization;
    std::uint64_t seed = 0;
};

std::string encode_model(const TrainedModel& model);
TrainedModel decode_model(const std::string& bytes);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace dlpr::nn
