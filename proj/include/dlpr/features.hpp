#pragma once

// Hudgins time-domain features: mean absolute value, waveform length,
// zero crossings and slope sign changes.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dlpr/dataio.hpp"

namespace dlpr::features {

struct TdFeatures {
    double mav = 0.0;
    double wl = 0.0;
    long zc = 0;
    long ssc = 0;
};

struct Thresholds {
    double zc = 0.0;
    double ssc = 0.0;
};

TdFeatures td_features(std::span<const double> w, Thresholds thr = {});

// Row layout: [mav, wl, zc, ssc] per channel, channel-major.
std::vector<double> td_feature_row(std::span<const std::span<const double>> channels, Thresholds thr = {});

// TD rows over sample-count windows of every recording.
data::WindowedDataset extract_td_dataset(std::span<const data::Recording> recs, std::size_t window,
                                         std::size_t shift, Thresholds thr = {});

// Single recording, window and increment given in milliseconds (floor conversion).
data::WindowedDataset extract_feature_matrix(const data::Recording& rec, double window_ms, double increment_ms,
                                             Thresholds thr = {});

// CSV with header ch{c}_{mav|wl|zc|ssc},...,label
std::string feature_csv_header(std::size_t channels);
void write_feature_csv(const data::WindowedDataset& ds, std::size_t channels, const std::string& path);

}  // namespace dlpr::features
