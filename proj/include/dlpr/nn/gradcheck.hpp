#pragma once

// Central finite-difference checks of the analytic backward passes.
// Numerical derivatives use only forward evaluations.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace dlpr::nn {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kLayerTolerance = 1e-4;
inline constexpr double kModelTolerance = 1e-3;
// Magnitudes below this are compared absolutely rather than relatively.
inline constexpr double kRelativeFloor = 1e-6;

struct GradCheckResult {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    double tolerance = kLayerTolerance;

    bool passed() const { return max_rel_error < tolerance; }
};

double relative_error(double analytic, double numeric);

// One result per layer kind plus the full toy model (last entry).
std::vector<GradCheckResult> run_gradchecks(std::uint64_t seed);

GradCheckResult check_conv1d(std::uint64_t seed, std::size_t kernel = 3);
GradCheckResult check_dense(std::uint64_t seed);
GradCheckResult check_batchnorm_conv(std::uint64_t seed);
GradCheckResult check_batchnorm_dense(std::uint64_t seed);
GradCheckResult check_relu(std::uint64_t seed);
GradCheckResult check_maxpool(std::uint64_t seed);
GradCheckResult check_global_avg_pool(std::uint64_t seed);
GradCheckResult check_softmax_cross_entropy(std::uint64_t seed);
GradCheckResult check_toy_model(std::uint64_t seed);

}  // namespace dlpr::nn
