#include "dlpr/features.hpp"

#include <cmath>
#include <fstream>

#include "dlpr/error.hpp"
#include "dlpr/parallel.hpp"

namespace dlpr::features {

TdFeatures td_features(std::span<const double> w, Thresholds thr) {
    if (w.size() < 3) throw Error(ErrorKind::InvalidWindow, "TD features need at least 3 samples");
    TdFeatures f;
    const std::size_t t = w.size();
    for (std::size_t j = 0; j < t; ++j) f.mav += std::abs(w[j]);
    f.mav /= static_cast<double>(t);
    for (std::size_t j = 0; j + 1 < t; ++j) {
        f.wl += std::abs(w[j + 1] - w[j]);
        const bool crosses = (w[j] > 0.0 && w[j + 1] < 0.0) || (w[j] < 0.0 && w[j + 1] > 0.0);
        if (crosses && std::abs(w[j] - w[j + 1]) > thr.zc) ++f.zc;
    }
    for (std::size_t j = 1; j + 1 < t; ++j)
        if ((w[j] - w[j - 1]) * (w[j] - w[j + 1]) > thr.ssc) ++f.ssc;
    return f;
}

std::vector<double> td_feature_row(std::span<const std::span<const double>> channels, Thresholds thr) {
    std::vector<double> row;
    row.reserve(4 * channels.size());
    for (const auto& ch : channels) {
        const TdFeatures f = td_features(ch, thr);
        row.push_back(f.mav);
        row.push_back(f.wl);
        row.push_back(static_cast<double>(f.zc));
        row.push_back(static_cast<double>(f.ssc));
    }
    return row;
}

data::WindowedDataset extract_td_dataset(std::span<const data::Recording> recs, std::size_t window,
                                         std::size_t shift, Thresholds thr) {
    if (window < 3) throw Error(ErrorKind::InvalidWindow, "feature window must be at least 3 samples");
    data::WindowedDataset ds;
    for (std::size_t r = 0; r < recs.size(); ++r) {
        const data::Recording& rec = recs[r];
        const auto segments = data::segment(rec, window, shift);
        std::vector<std::vector<double>> rows(segments.size());
        parallel_for(segments.size(), [&](std::size_t i) { rows[i] = td_feature_row(segments[i].channels, thr); });
        for (std::size_t i = 0; i < segments.size(); ++i) {
            const std::size_t start = segments[i].start;
            ds.inputs.push_back(std::move(rows[i]));
            ds.labels.push_back(data::majority_label(std::span(rec.labels).subspan(start, window)));
            ds.repetitions.push_back(data::majority_label(std::span(rec.repetitions).subspan(start, window)));
            ds.subjects.push_back(rec.subject.id);
            ds.provenance.push_back({r, start});
        }
    }
    return ds;
}

data::WindowedDataset extract_feature_matrix(const data::Recording& rec, double window_ms, double increment_ms,
                                             Thresholds thr) {
    const std::size_t window = data::ms_to_samples(rec.sampling_rate, window_ms);
    const std::size_t shift = data::ms_to_samples(rec.sampling_rate, increment_ms);
    if (window < 3 || shift < 1)
        throw Error(ErrorKind::ConfigError, "window/increment convert to " + std::to_string(window) + "/" +
                                                std::to_string(shift) + " samples");
    return extract_td_dataset(std::span(&rec, 1), window, shift, thr);
}

std::string feature_csv_header(std::size_t channels) {
    static constexpr const char* kNames[] = {"mav", "wl", "zc", "ssc"};
    std::string h;
    for (std::size_t c = 1; c <= channels; ++c)
        for (const char* name : kNames) h += "ch" + std::to_string(c) + "_" + name + ",";
    h += "label";
    return h;
}

void write_feature_csv(const data::WindowedDataset& ds, std::size_t channels, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::ParseError, "cannot write " + path);
    out << feature_csv_header(channels) << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.inputs[i]) out << data::format_double(v) << ',';
        out << ds.labels[i] << '\n';
    }
}

}  // namespace dlpr::features
